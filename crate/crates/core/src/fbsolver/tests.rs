use super::*;
use std::time::Instant;

fn wedge_problem(n: usize) -> FbProblem {
    let s = 3f64.sqrt();
    FbProblem::from_fns(n, -1.0, 1.0, |_, _| 0.0, move |_, x2| (s * x2).max(0.0), 0.5, 10.0)
}

fn wedge_slope(a: f64) -> f64 {
    ((1.0 - a * a) / (a * a)).sqrt()
}

#[test]
fn wedge_is_reproduced_off_the_kink() {
    let p = wedge_problem(33);
    let sol = solve_fb(&p, 1e-10, 200_000).unwrap();
    let band = kink_band(&p, &sol.contact_set);
    let s = wedge_slope(p.a);
    let mut err: f64 = 0.0;
    for i in 0..p.n {
        for j in 0..p.n {
            let exact = (s * p.coord(j)).max(0.0);
            let e = (sol.g_field[(i, j)] - exact).abs();
            if band[(i, j)] {
                assert!(e <= p.spacing(), "band error {e} at ({i}, {j})");
            } else {
                err = err.max(e);
            }
        }
    }
    assert!(err <= 1e-6, "sup error {err}");
    assert!(sol.interior_residual <= 1e-10);
    assert!(sol.contact_residual <= 1e-8);
}

#[test]
fn slope_near_contact_matches_contact_angle() {
    let p = wedge_problem(33);
    let sol = solve_fb(&p, 1e-10, 200_000).unwrap();
    let d = p.spacing();
    let s = wedge_slope(p.a);
    let mut checked = 0;
    for i in 2..p.n - 2 {
        for j in 2..p.n - 2 {
            let free = !sol.contact_set[(i, j)];
            let near = neighbours4(i, j).iter().any(|&q| sol.contact_set[q]);
            if free && near {
                let g = &sol.g_field;
                let gx = (g[(i + 1, j)] - g[(i - 1, j)]) / (2.0 * d);
                let gy = (g[(i, j + 1)] - g[(i, j - 1)]) / (2.0 * d);
                let m = gx.hypot(gy);
                assert!((m - s).abs() <= 0.02 * s, "|grad g| = {m}");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn kink_band_error_against_line_halves_under_refinement() {
    let s = 3f64.sqrt();
    let band_error = |n: usize| {
        let p = wedge_problem(n);
        let sol = solve_fb(&p, 1e-10, 400_000).unwrap();
        let band = kink_band(&p, &sol.contact_set);
        let mut e: f64 = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let touches_free = band[(i, j)]
                    && (neighbours4(i, j).iter().any(|&q| !sol.contact_set[q]) || !sol.contact_set[(i, j)]);
                if touches_free {
                    e = e.max((sol.g_field[(i, j)] - s * p.coord(j)).abs());
                }
            }
        }
        e
    };
    let coarse = band_error(33);
    let fine = band_error(65);
    assert!(coarse / fine >= 1.8, "ratio {}", coarse / fine);
}

#[test]
fn plane_above_obstacle_is_returned() {
    let plane = |x1: f64, x2: f64| 2.0 + 0.3 * x1 - 0.2 * x2;
    let p = FbProblem::from_fns(33, -1.0, 1.0, |_, _| 0.0, plane, 0.5, 10.0);
    let sol = solve_fb(&p, 1e-11, 200_000).unwrap();
    assert!(sol.contact_set.iter().all(|&c| !c));
    for i in 0..p.n {
        for j in 0..p.n {
            assert!((sol.g_field[(i, j)] - plane(p.coord(i), p.coord(j))).abs() < 1e-9);
        }
    }
}

#[test]
fn recomputed_residuals_agree_and_detect_perturbations() {
    let p = wedge_problem(33);
    let sol = solve_fb(&p, 1e-10, 200_000).unwrap();
    let r = fb_residuals(&sol, &p);
    assert!((r.interior_residual - sol.interior_residual).abs() <= 1e-12 + 1e-9 * sol.interior_residual);
    assert!((r.contact_residual - sol.contact_residual).abs() <= 1e-12);

    let mut bad = sol.clone();
    let c = p.n / 2;
    bad.g_field[(c, p.n - 8)] += 1e-3;
    let rb = fb_residuals(&bad, &p);
    assert!(rb.interior_residual > 10.0 * r.interior_residual.max(1e-12));

    let mut bad = sol.clone();
    let c = p.n / 2;
    bad.g_field[(c, c + 1)] += 0.2 * p.spacing();
    let rb = fb_residuals(&bad, &p);
    assert!(rb.contact_residual > 10.0 * r.contact_residual.max(1e-12));
}

#[test]
fn obstacle_is_respected_and_bumps_are_wetted() {
    let bump = |x1: f64, x2: f64| 0.3 * (-8.0 * (x1 * x1 + x2 * x2)).exp();
    let p = FbProblem::from_fns(33, -1.0, 1.0, bump, |_, _| 0.25, 0.6, 10.0);
    let sol = solve_fb(&p, 1e-9, 400_000).unwrap();
    for (g, h) in sol.g_field.iter().zip(p.h_field.iter()) {
        assert!(g - h >= -1e-12);
    }
    assert!(sol.contact_set[(16, 16)]);
}

#[test]
fn raising_boundary_data_never_lowers_the_solution() {
    let s = 3f64.sqrt();
    let sols: Vec<FbSolution> = [0.0, 0.1, 0.25]
        .iter()
        .map(|&lift| {
            let p = FbProblem::from_fns(33, -1.0, 1.0, |_, _| 0.0, move |_, x2| (s * x2).max(0.0) + lift, 0.5, 10.0);
            solve_fb(&p, 1e-10, 400_000).unwrap()
        })
        .collect();
    for w in sols.windows(2) {
        for (lo, hi) in w[0].g_field.iter().zip(w[1].g_field.iter()) {
            assert!(hi - lo >= -1e-8, "{lo} > {hi}");
        }
    }
}

#[test]
fn sweep_order_does_not_change_the_result() {
    let p = wedge_problem(33);
    let tol = 1e-10;
    let rb = solve_fb_with(&p, &FbOptions { tol, ..FbOptions::default() }).unwrap();
    let lex = solve_fb_with(&p, &FbOptions { tol, order: SweepOrder::Lexicographic, ..FbOptions::default() }).unwrap();
    let diff = rb.g_field.iter().zip(lex.g_field.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= tol / 10.0 + 1e-12, "diff {diff}");
    assert_eq!(rb.contact_set, lex.contact_set);
}

#[test]
fn fine_grid_runs_within_budget() {
    let p = wedge_problem(129);
    let t = Instant::now();
    let sol = solve_fb(&p, 1e-9, 400_000).unwrap();
    assert!(t.elapsed().as_secs_f64() <= 10.0, "took {:?}", t.elapsed());
    assert!(sol.interior_residual <= 1e-9);
}

#[test]
fn invalid_problems_are_rejected() {
    let mut p = wedge_problem(17);
    p.a = 1.2;
    assert!(matches!(solve_fb(&p, 1e-9, 10), Err(FbError::InvalidProblem(_))));
    let p = FbProblem::from_fns(17, -1.0, 1.0, |_, _| 1.0, |_, _| 0.0, 0.5, 10.0);
    assert!(matches!(solve_fb(&p, 1e-9, 10), Err(FbError::InvalidProblem(_))));
}

#[test]
fn tiny_budget_reports_non_convergence() {
    let p = wedge_problem(33);
    let o = FbOptions { max_iter: 5, cascade: false, ..FbOptions::default() };
    assert!(matches!(solve_fb_with(&p, &o), Err(FbError::NotConverged { .. })));
}

#[test]
fn csv_export_has_one_line_per_row() {
    let p = wedge_problem(9);
    let csv = field_to_csv(&p.h_field);
    assert_eq!(csv.lines().count(), 9);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 9);
}
