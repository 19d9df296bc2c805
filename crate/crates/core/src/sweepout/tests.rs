use super::*;
use crate::surface::add_pyramid_bump;
use proptest::prelude::*;
use std::f64::consts::PI;

const THETA: f64 = PI / 3.0;

fn unit_ball() -> ConvexDomain {
    ConvexDomain::unit_ball()
}

#[test]
fn too_few_slices() {
    let err = plane_sweep(&unit_ball(), Vec3::z(), 2, THETA, 16).unwrap_err();
    assert_eq!(err, SweepoutError::TooFewSlices(2));
}

#[test]
fn wrong_domain() {
    let d = ConvexDomain::ellipsoid(Vec3::zeros(), [1.0, 1.0, 2.0]);
    assert!(matches!(plane_sweep(&d, Vec3::z(), 5, THETA, 16), Err(SweepoutError::Surface(_))));
}

#[test]
fn plane_sweep_argmax_and_max() {
    let fam = plane_sweep(&unit_ball(), Vec3::z(), 101, THETA, 64).unwrap();
    assert!(fam.check(DEFAULT_DELTA_VOL).is_empty(), "{:?}", fam.check(DEFAULT_DELTA_VOL));
    let i = fam.argmax();
    let d = fam.slices[i].offset;
    assert!((d - 0.5).abs() <= 0.02, "argmax offset {d}");
    let expected = PI * 2.25;
    assert!((fam.max_f() - expected).abs() <= 0.01 * expected, "max {}", fam.max_f());
    for s in &fam.slices {
        let f = PI * (1.0 - s.offset * s.offset) + 2.0 * PI * 0.5 * (1.0 + s.offset);
        assert!((s.f_a - f).abs() <= 0.01 * f, "slice at {}", s.offset);
    }
}

#[test]
fn volume_fractions_follow_cap_volume() {
    let fam = plane_sweep(&unit_ball(), Vec3::z(), 11, THETA, 48).unwrap();
    for s in &fam.slices[1..10] {
        let d = s.offset;
        let exact = PI * (1.0 + d) * (1.0 + d) * (2.0 - d) / 3.0 / (4.0 * PI / 3.0);
        assert!((s.volume_fraction - exact).abs() < 5e-3, "d = {d}: {} vs {exact}", s.volume_fraction);
    }
    let ts: Vec<f64> = fam.slices.iter().map(|s| s.t).collect();
    assert_eq!(ts[0], 0.0);
    assert_eq!(ts[10], 1.0);
}

#[test]
fn orthogonal_contact_argmax_at_equator() {
    let fam = plane_sweep(&unit_ball(), Vec3::x(), 41, PI / 2.0, 48).unwrap();
    let i = fam.argmax();
    assert!(fam.slices[i].offset.abs() < 0.03, "{}", fam.slices[i].offset);
    assert!((fam.max_f() - PI).abs() < 0.01 * PI);
}

#[test]
fn csv_has_one_row_per_slice() {
    let fam = plane_sweep(&unit_ball(), Vec3::z(), 5, THETA, 16).unwrap();
    let csv = fam.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,offset,volume_fraction,F_a");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1].split(',').count(), 4);
}

#[test]
fn stale_energy_is_flagged() {
    let mut fam = plane_sweep(&unit_ball(), Vec3::z(), 5, THETA, 16).unwrap();
    fam.slices[2].f_a += 1e-12;
    assert!(fam.check(DEFAULT_DELTA_VOL).iter().any(|m| m.contains("stale")));
}

#[test]
fn minmax_on_plane_sweep() {
    let domain = unit_ball();
    let fam = plane_sweep(&domain, Vec3::z(), 51, THETA, 32).unwrap();
    let res = minmax(&fam, &domain, &MinMaxOptions::default()).unwrap();
    let expected = 2.25 * PI;
    assert!((res.m0_estimate - expected).abs() <= 0.02 * expected, "m0 {}", res.m0_estimate);
    assert!(res.critical_residual(&domain).unwrap() <= 2e-2);
    assert!((res.critical_offset - 0.5).abs() <= 0.02);
    for w in res.history.windows(2) {
        assert!(w[1].1 <= w[0].1);
    }
    assert_eq!(res.history.last().unwrap().1, res.m0_estimate);
    assert!(res.family.check(DEFAULT_DELTA_VOL).is_empty());
    for w in res.epsilons.windows(2) {
        assert_eq!(w[1], w[0] / 2.0);
    }
}

#[test]
fn minmax_removes_a_bump() {
    let domain = unit_ball();
    let fam = plane_sweep(&domain, Vec3::z(), 21, THETA, 24).unwrap();
    let unbumped = fam.max_f();
    let mut bumped = fam.clone();
    let i = fam.argmax();
    let s = &fam.slices[i];
    let apex = Vec3::new(0.0, 0.0, s.offset);
    let pair = add_pyramid_bump(&s.pair, apex, 0.3, 0.3, Vec3::z());
    bumped.slices[i] = bumped.make_slice(s.t, s.offset, pair);
    assert!(bumped.max_f() > unbumped * 1.01);
    let options = MinMaxOptions { max_outer: 12, ..MinMaxOptions::default() };
    let res = minmax(&bumped, &domain, &options).unwrap();
    assert!((res.m0_estimate - unbumped).abs() <= 0.01 * unbumped, "{} vs {unbumped}", res.m0_estimate);
}

#[test]
fn three_slice_family_is_local_relax_of_middle() {
    let domain = unit_ball();
    let fam = plane_sweep(&domain, Vec3::z(), 3, PI / 2.0, 16).unwrap();
    let mid = fam.slices[1].pair.clone();
    let bumped = add_pyramid_bump(&mid, Vec3::zeros(), 0.3, 0.2, Vec3::z());
    let mut fam = fam;
    fam.slices[1] = fam.make_slice(0.5, 0.0, bumped.clone());
    let options = MinMaxOptions { max_outer: 1, ..MinMaxOptions::default() };
    let res = minmax(&fam, &domain, &options).unwrap();
    let eps = options.eps0_fraction * fam.max_f();
    let flow = FlowOptions { barrier_epsilon: Some(eps), ..options.flow.clone() };
    let center = sigma_centroid(&bumped);
    let direct = local_relax(&bumped, &domain, &center, options.region_radius, &flow).unwrap();
    assert_eq!(res.critical_index, 1);
    assert_eq!(res.critical_slice.vertices, direct.pair.vertices);
    assert_eq!(res.family.slices[0].pair.vertices, fam.slices[0].pair.vertices);
    assert_eq!(res.family.slices[2].pair.vertices, fam.slices[2].pair.vertices);
}

fn fake_result(domain: &ConvexDomain, theta: f64, res: usize) -> MinMaxResult {
    let fam = plane_sweep(domain, Vec3::z(), 5, theta, res).unwrap();
    let a = theta.cos();
    let crit = build_disk_cap(domain, Vec3::z(), a, theta, res).unwrap();
    let f = capillarity_energy(&crit).f_a;
    MinMaxResult {
        m0_estimate: f,
        critical_slice: crit,
        critical_t: 0.5,
        critical_index: 2,
        critical_offset: a,
        history: vec![(0, f)],
        status: MinMaxStatus::Converged,
        family: fam,
        epsilons: vec![],
    }
}

#[test]
fn lower_bound_margins() {
    let domain = unit_ball();
    for (deg, tol) in [(60.0f64, 0.02), (0.99f64.acos().to_degrees(), 0.2)] {
        let theta = deg.to_radians();
        let a = theta.cos();
        let lb = lower_bound_check(&domain, theta, &fake_result(&domain, theta, 64));
        let exact = PI * (1.0 - a) * (1.0 - a);
        assert!((lb.analytic.unwrap() - exact).abs() < 1e-14);
        assert!(lb.margin > 0.0);
        assert!((lb.margin - exact).abs() <= tol * exact, "a = {a}: {} vs {exact}", lb.margin);
    }
    let lb = lower_bound_check(&domain, PI / 2.0, &fake_result(&domain, PI / 2.0, 48));
    assert!((lb.margin - PI).abs() < 0.01 * PI);
}

#[test]
fn admissible_examples() {
    let u = Ball::new(Vec3::zeros(), 0.1);
    assert!(is_admissible(&u, &Ball::new(Vec3::new(1.0, 0.0, 0.0), 0.1)));
    assert!(!is_admissible(&u, &Ball::new(Vec3::new(0.5, 0.0, 0.0), 0.1)));
    assert!(!is_admissible(&u, &Ball::new(Vec3::new(0.15, 0.0, 0.0), 0.1)));
    assert!(!is_admissible(&u, &u));
}

fn ball_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.01f64..0.5)
}

fn separated_pair(c: (f64, f64, f64, f64), r2: f64, dir: (f64, f64, f64), extra: f64) -> (Ball, Ball) {
    let u1 = Ball::new(Vec3::new(c.0, c.1, c.2), c.3);
    let d = Vec3::new(dir.0, dir.1, dir.2);
    let d = if d.norm() < 1e-6 { Vec3::x() } else { d.normalize() };
    let gap = 2.0 * u1.diameter().min(2.0 * r2) + extra;
    let u2 = Ball::new(u1.center + (u1.radius + r2 + gap) * d, r2);
    (u1, u2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn separated_pairs_have_a_disjoint_cross_pair(
        u in ball_strategy(), ur in 0.01f64..0.5, ud in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), ue in 0.0f64..0.3,
        v in ball_strategy(), vr in 0.01f64..0.5, vd in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), ve in 0.0f64..0.3,
    ) {
        let (u1, u2) = separated_pair(u, ur, ud, ue);
        let (v1, v2) = separated_pair(v, vr, vd, ve);
        prop_assert!(is_separated(&u1, &u2, 2.0));
        prop_assert!(is_separated(&v1, &v2, 2.0));
        let found = [(&u1, &v1), (&u1, &v2), (&u2, &v1), (&u2, &v2)].iter().any(|(a, b)| a.disjoint(b));
        prop_assert!(found);
    }
}
