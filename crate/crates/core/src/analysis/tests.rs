use super::*;
use crate::domain::ConvexDomain;
use crate::flow::{pull_tight, FlowOptions};
use crate::surface::{build_capillary_wedge, build_disk_cap, build_flat_disk, build_sphere_patch, add_pyramid_bump};
use std::f64::consts::PI;

const THETA: f64 = PI / 3.0;
const J01_SQ: f64 = 5.783185962946784;

fn disk_cap(res: usize) -> (ConvexDomain, SurfacePair) {
    let ball = ConvexDomain::unit_ball();
    let pair = build_disk_cap(&ball, Vec3::z(), 0.5, THETA, res).unwrap();
    (ball, pair)
}

fn contact_points(pair: &SurfacePair, count: usize) -> Vec<Vec3> {
    let c = &pair.contact_polyline;
    (0..count).map(|k| pair.vertices[c[k * c.len() / count]]).collect()
}

fn radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn density_at_contact_points() {
    let (ball, pair) = disk_cap(64);
    let target = PI * 1.5 / 2.0;
    for x in contact_points(&pair, 5) {
        let rep = density_ratio(&pair, &ball, &x, &radii(0.14, 0.42, 8)).unwrap();
        assert_eq!(rep.violations, 0);
        assert!((rep.density_limit_estimate - target).abs() <= 0.02 * target, "{}", rep.density_limit_estimate);
        for (r, (q, adj)) in rep.radii.iter().zip(rep.ratios.iter().zip(&rep.adjusted_ratios)) {
            assert_eq!(*adj, (rep.lambda * r).exp() * q);
        }
    }
}

#[test]
fn density_inside_gamma() {
    let (ball, pair) = disk_cap(48);
    let x = Vec3::new(0.0, 0.0, -1.0);
    let rep = density_ratio(&pair, &ball, &x, &radii(0.2, 0.45, 6)).unwrap();
    for q in &rep.ratios {
        assert!((q - 0.5 * PI).abs() <= 0.02 * 0.5 * PI, "{q}");
    }
}

#[test]
fn density_rejects_small_radius_and_interior_points() {
    let (ball, pair) = disk_cap(32);
    let x = contact_points(&pair, 1)[0];
    assert!(matches!(density_ratio(&pair, &ball, &x, &[0.01, 0.3]), Err(AnalysisError::RadiusTooSmall { .. })));
    assert!(matches!(density_ratio(&pair, &ball, &Vec3::zeros(), &[0.3]), Err(AnalysisError::NotOnBoundary(_))));
}

#[test]
fn lp_variant_is_monotone_on_disk_cap() {
    let (ball, pair) = disk_cap(48);
    let x = contact_points(&pair, 1)[0];
    let options = MonotonicityOptions { lp_exponent: Some(4.0), ..MonotonicityOptions::default() };
    let rep = density_ratio_with(&pair, &ball, &x, &radii(0.2, 0.45, 6), &options).unwrap();
    assert_eq!(rep.violations, 0);
}

#[test]
fn sigma_v_on_disk_cap() {
    let mut estimates = Vec::new();
    for res in [32, 64] {
        let (ball, pair) = disk_cap(res);
        let rep = first_variation_decomposition(&pair, &ball, &SigmaVOptions::default()).unwrap();
        assert!(rep.sigma_v_estimate > 0.0);
        assert!(rep.bound_holds);
        let area = crate::energy::capillarity_energy(&pair).area_sigma;
        assert!(rep.sigma_v_estimate <= 2.0 * area * 10.0);
        estimates.push(rep.sigma_v_estimate);
    }
    let rel = (estimates[1] - estimates[0]).abs() / estimates[1];
    assert!(rel <= 0.05, "{estimates:?}");
}

#[test]
fn sigma_v_vanishes_away_from_wall() {
    let ball = ConvexDomain::unit_ball();
    let pair = build_flat_disk(Vec3::zeros(), Vec3::z(), 0.3, 16, THETA);
    let rep = first_variation_decomposition(&pair, &ball, &SigmaVOptions::default()).unwrap();
    assert!(rep.sigma_v_estimate.abs() <= 1e-8);
}

#[test]
fn pinned_flat_disk_bessel_eigenvalue() {
    let ball = ConvexDomain::unit_ball();
    let pair = build_flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 24, THETA);
    let options = StabilityOptions { force_q_zero: true, ..StabilityOptions::default() };
    let rep = stability_spectrum(&pair, &ball, &options).unwrap();
    assert!((rep.lambda_min() - J01_SQ).abs() <= 0.02 * J01_SQ, "{}", rep.lambda_min());
    assert!(rep.eigenvalues.iter().all(|&l| l >= 0.0));
    assert!(rep.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep.max_asymmetry <= 1e-12);
}

#[test]
fn disk_cap_spectrum() {
    let (ball, pair) = disk_cap(32);
    let rep = stability_spectrum(&pair, &ball, &StabilityOptions::default()).unwrap();
    eprintln!("{:?}", rep.eigenvalues);
    assert!(rep.eigenvalues.len() >= 6);
    assert!(rep.num_near_zero >= 2, "{:?}", rep.eigenvalues);
    let r = (1.0f64 - 0.25).sqrt();
    for c in &rep.q_field {
        assert!((c.q - 1.0 / r).abs() < 0.05, "{c:?}");
    }
}

#[test]
fn rotational_jacobi_fields_pin_the_wall_convention() {
    let (ball, pair) = disk_cap(32);
    let form = assemble_stability(&pair, &ball, &StabilityOptions::default()).unwrap();
    for e in [Vec3::x(), Vec3::y()] {
        let u: Vec<f64> = pair.vertices.iter().map(|p| e.cross(p).dot(&Vec3::z())).collect();
        let qv = form.quadratic(&u);
        let norm = form.mass_norm2(&u);
        assert!(qv.abs() <= TOL_EIG * norm, "Q = {qv}, |v|² = {norm}");
    }
}

#[test]
fn constant_field_rayleigh_quotient() {
    let (ball, pair) = disk_cap(24);
    let form = assemble_stability(&pair, &ball, &StabilityOptions::default()).unwrap();
    let ones = vec![1.0; pair.num_vertices()];
    let rq = form.quadratic(&ones) / form.mass_norm2(&ones);
    let direct = constant_rayleigh_quotient(&pair, &form);
    assert!((rq - direct).abs() <= 1e-10 * direct.abs().max(1.0), "{rq} vs {direct}");
}

#[test]
fn jacobi_fields() {
    let flat = build_flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 8, THETA);
    let j = jacobi_field(&flat, &Vec3::z());
    assert!((j.min - 1.0).abs() < 1e-12 && (j.max - 1.0).abs() < 1e-12);
    assert!(jacobi_field(&flat, &-Vec3::z()).graphical());
    let (_, cap) = disk_cap(16);
    let j = jacobi_field(&cap, &-Vec3::z());
    assert!((j.max + 1.0).abs() < 1e-12);
    assert!(j.graphical());
    let hemi = build_sphere_patch(Vec3::zeros(), 1.0, Vec3::z(), PI / 2.0, 24, false, THETA);
    let j = jacobi_field(&hemi, &Vec3::z());
    assert!((j.min + 1.0).abs() < 1e-3, "{}", j.min);
    assert!(j.max.abs() < 0.1, "{}", j.max);
    assert!(!j.graphical() || j.max > -1e-1);
}

#[test]
fn stability_inequality_cases() {
    let (_, wedge) = build_capillary_wedge(THETA, 8);
    let zeta: Vec<f64> = wedge.vertices.iter().map(|p| (1.0 - 4.0 * p.norm_squared()).max(0.0)).collect();
    let s = stability_inequality_check(&wedge, &zeta).unwrap();
    assert!(s.lhs <= 1e-20 && s.holds);
    assert!((s.c - stability_constant(0.5)).abs() < 1e-15);
    let zero = stability_inequality_check(&wedge, &vec![0.0; wedge.num_vertices()]).unwrap();
    assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
    let (domain, wedge) = build_capillary_wedge(THETA, 8);
    let bumped = add_pyramid_bump(&wedge, Vec3::new(0.25, 0.0, 0.25 * 3f64.sqrt()), 0.2, 0.03, Vec3::new(-3f64.sqrt() / 2.0, 0.0, 0.5));
    let relaxed = pull_tight(&bumped, &domain, &FlowOptions { grad_tol: 1e-9, ..FlowOptions::default() }).unwrap().pair;
    let s = stability_inequality_check(&relaxed, &zeta).unwrap();
    assert!(s.holds, "{s:?}");
    assert!(matches!(stability_inequality_check(&relaxed, &[1.0]), Err(AnalysisError::FieldLength { .. })));
}

#[test]
fn curvature_distance_cases() {
    let flat = build_flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 16, THETA);
    assert!(curvature_distance_product(&flat).unwrap().sup < 1e-6);
    let mut sups = Vec::new();
    for res in [48, 96] {
        let cap = build_sphere_patch(Vec3::zeros(), 1.0, Vec3::z(), 1.0, res, true, THETA);
        let cd = curvature_distance_product(&cap).unwrap();
        assert!(!cd.used_diameter);
        assert!((cd.sup - 2f64.sqrt()).abs() <= 0.1 * 2f64.sqrt(), "{}", cd.sup);
        sups.push(cd.sup);
    }
    assert!((sups[1] - sups[0]).abs() <= 0.05 * sups[1], "{sups:?}");
    let (_, pair) = disk_cap(32);
    let cd = curvature_distance_product(&pair).unwrap();
    assert!(cd.used_diameter);
    assert!(cd.sup < 0.05, "{}", cd.sup);
}

#[test]
fn blowup_at_contact_point() {
    let (ball, pair) = disk_cap(192);
    let x = contact_points(&pair, 1)[0];
    let h = local_mesh_size(&pair, &x, 0.1);
    let scales = [0.4, 0.2, 4.0 * h];
    let rep = blowup(&pair, &ball, &x, &scales).unwrap();
    let w = rep.wedge_fit;
    assert!((w.dihedral.to_degrees() - 60.0).abs() <= 2.0, "{}", w.dihedral.to_degrees());
    assert!(w.sigma.rms <= 2.0 * h && w.gamma.unwrap().rms <= 2.0 * h);
    assert!((rep.limit_dihedral.to_degrees() - 60.0).abs() < (w.dihedral.to_degrees() - 60.0).abs());
    let target = PI * 1.5 / 2.0;
    let finest = *rep.density_at_scale.last().unwrap();
    assert!((finest - target).abs() <= 0.03 * target, "{finest}");
    for (s, d) in rep.scales.iter().zip(&rep.density_at_scale) {
        let direct = density_ratio(&pair, &ball, &x, &[*s]).unwrap().ratios[0];
        assert!((d - direct).abs() <= 1e-10, "{d} vs {direct}");
    }
    assert!(rep.scales.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn blowup_off_the_contact_line() {
    let (ball, pair) = disk_cap(32);
    let h = local_mesh_size(&pair, &Vec3::new(0.0, 0.0, 0.5), 0.4);
    let rep = blowup(&pair, &ball, &Vec3::new(0.0, 0.0, 0.5), &[4.0 * h]).unwrap();
    assert!(rep.wedge_fit.gamma_empty && rep.wedge_fit.dihedral.is_nan());
    assert!(rep.wedge_fit.sigma.normal.cross(&Vec3::z()).norm() < 1e-9);
    assert!(rep.limit_dihedral.is_nan());
    let x = Vec3::new(0.0, 0.0, 0.5);
    assert!(matches!(blowup(&pair, &ball, &x, &[h]), Err(AnalysisError::ScaleBelowResolution { .. })));
}
