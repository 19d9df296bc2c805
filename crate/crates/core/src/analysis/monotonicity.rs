//! Boundary density ratios and the first-variation decomposition of `V + aW`.

use super::{local_mesh_size, AnalysisError};
use crate::domain::ConvexDomain;
use crate::energy::raw_gradient;
use crate::geom::{compensated_sum, smoothstep, triangle_area, triangle_ball_area, Vec3};
use crate::record::Record;
use crate::surface::SurfacePair;
use nalgebra::{DMatrix, DVector};

/// Relative tolerance on decreases of the adjusted ratio.
pub const MONOTONICITY_TOL: f64 = 1e-3;
/// `Λ = LAMBDA_GEOM / min_curvature_radius`.
pub const LAMBDA_GEOM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityOptions {
    /// Overrides `Λ`; by default it is derived from the wall curvature.
    pub lambda: Option<f64>,
    /// Switches to the `L^p` form `e^{Λρ}(ratio^{1/p} + Λ ρ^{1-2/p})`.
    pub lp_exponent: Option<f64>,
    pub tol: f64,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        Self { lambda: None, lp_exponent: None, tol: MONOTONICITY_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub center: Vec3,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub lambda: f64,
    pub adjusted_ratios: Vec<f64>,
    pub violations: usize,
    pub density_limit_estimate: f64,
}

impl MonotonicityReport {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.num("lambda", self.lambda);
        r.int("violations", self.violations as i64);
        r.num("density_limit_estimate", self.density_limit_estimate);
        for (i, (rho, ratio)) in self.radii.iter().zip(&self.ratios).enumerate() {
            r.num(&format!("radius_{i}"), *rho);
            r.num(&format!("ratio_{i}"), *ratio);
            r.num(&format!("adjusted_{i}"), self.adjusted_ratios[i]);
        }
        r
    }
}

/// `‖V‖(B_ρ(x)) + a‖W‖(B_ρ(x))` with triangles clipped exactly against the ball.
pub fn weighted_mass_in_ball(pair: &SurfacePair, x: &Vec3, rho: f64) -> f64 {
    let v = &pair.vertices;
    let m = pair.multiplicity as f64;
    let sheet = |tris: &[[usize; 3]]| {
        compensated_sum(tris.iter().map(|t| triangle_ball_area(&v[t[0]], &v[t[1]], &v[t[2]], x, rho)))
    };
    m * (sheet(&pair.sigma_triangles) + pair.a * sheet(&pair.gamma_triangles))
}

pub fn density_ratio(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    x: &Vec3,
    radii: &[f64],
) -> Result<MonotonicityReport, AnalysisError> {
    density_ratio_with(pair, domain, x, radii, &MonotonicityOptions::default())
}

pub fn density_ratio_with(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    x: &Vec3,
    radii: &[f64],
    options: &MonotonicityOptions,
) -> Result<MonotonicityReport, AnalysisError> {
    domain.outward_normal(x).map_err(|_| AnalysisError::NotOnBoundary(*x))?;
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.is_empty() {
        return Err(AnalysisError::EmptyInput("radii"));
    }
    for &r in &radii {
        let floor = 2.0 * local_mesh_size(pair, x, r);
        if r < floor {
            return Err(AnalysisError::RadiusTooSmall { radius: r, floor });
        }
    }
    let lambda = options.lambda.unwrap_or_else(|| {
        let r = domain.min_curvature_radius();
        if r.is_finite() {
            LAMBDA_GEOM / r
        } else {
            0.0
        }
    });
    let ratios: Vec<f64> = radii.iter().map(|&r| weighted_mass_in_ball(pair, x, r) / (r * r)).collect();
    let adjusted_ratios: Vec<f64> = radii
        .iter()
        .zip(&ratios)
        .map(|(&r, &q)| match options.lp_exponent {
            Some(p) => (lambda * r).exp() * (q.powf(1.0 / p) + lambda * r.powf(1.0 - 2.0 / p)),
            None => (lambda * r).exp() * q,
        })
        .collect();
    let mut violations = 0;
    for i in 0..adjusted_ratios.len() {
        for j in i + 1..adjusted_ratios.len() {
            if adjusted_ratios[j] < adjusted_ratios[i] * (1.0 - options.tol) {
                violations += 1;
            }
        }
    }
    let density_limit_estimate = extrapolate_to_zero(&radii, &ratios);
    Ok(MonotonicityReport { center: *x, radii, ratios, lambda, adjusted_ratios, violations, density_limit_estimate })
}

/// Least-squares polynomial (degree ≤ 2) in `ρ`, evaluated at `ρ = 0`.
fn extrapolate_to_zero(radii: &[f64], values: &[f64]) -> f64 {
    let n = radii.len();
    let degree = (n - 1).min(2);
    if degree == 0 {
        return values[0];
    }
    let scale = radii[n - 1];
    let a = DMatrix::from_fn(n, degree + 1, |i, k| (radii[i] / scale).powi(k as i32));
    let b = DVector::from_column_slice(values);
    match a.clone().svd(true, true).solve(&b, 1e-14) {
        Ok(c) => c[0],
        Err(_) => values[0],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaVOptions {
    pub num_probes: usize,
    /// Width of the wall band carrying the probe fields; default `min_curvature_radius / 4`.
    pub band: Option<f64>,
    /// Probe values below `-tol` count as positivity violations.
    pub tol: f64,
    /// Safety factor on the global bound `σ_V(∂M) ≤ 2 κ_max ‖V‖(M)`.
    pub safety: f64,
}

impl Default for SigmaVOptions {
    fn default() -> Self {
        Self { num_probes: 32, band: None, tol: 1e-8, safety: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SigmaVReport {
    pub sigma_v_estimate: f64,
    /// `σ_V(ψ_k)` for each probe of the partition of unity.
    pub per_probe: Vec<f64>,
    pub probe_centers: Vec<Vec3>,
    pub violations: usize,
    pub global_bound: f64,
    pub bound_holds: bool,
}

impl SigmaVReport {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.num("sigma_v_estimate", self.sigma_v_estimate);
        r.int("violations", self.violations as i64);
        r.num("global_bound", self.global_bound);
        r.flag("bound_holds", self.bound_holds);
        r
    }
}

/// Estimates `σ_V` from `δ(V+aW)[X] + ∫ X·H̃ d(‖V‖+a‖W‖)` with `H = 0`, over wall-normal
/// probe fields `X = χ(dist) ψ_k(π x) N(π x)`, where the `ψ_k` form a partition of unity
/// on the wall. `H̃ = −N div N` acts on the mass carried by ∂M, i.e. on Γ.
pub fn first_variation_decomposition(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    options: &SigmaVOptions,
) -> Result<SigmaVReport, AnalysisError> {
    let n = pair.num_vertices();
    let curv_radius = domain.min_curvature_radius();
    let band = options.band.unwrap_or(if curv_radius.is_finite() { 0.25 * curv_radius } else { 0.25 });
    let mut weight = vec![0.0; n];
    let mut foot = vec![Vec3::zeros(); n];
    for (i, v) in pair.vertices.iter().enumerate() {
        let dist = if pair.roles[i].on_wall() { 0.0 } else { (-domain.signed_distance(v)).max(0.0) };
        if dist >= band {
            continue;
        }
        let p = if pair.roles[i].on_wall() { *v } else { domain.project_to_boundary(v)? };
        weight[i] = 1.0 - smoothstep(dist / band);
        foot[i] = p;
    }
    let active: Vec<usize> = (0..n).filter(|&i| weight[i] > 0.0).collect();
    let mut report = SigmaVReport {
        sigma_v_estimate: 0.0,
        per_probe: Vec::new(),
        probe_centers: Vec::new(),
        violations: 0,
        global_bound: 0.0,
        bound_holds: true,
    };
    let area_sigma = pair.multiplicity as f64 * {
        let v = &pair.vertices;
        compensated_sum(pair.sigma_triangles.iter().map(|t| triangle_area(&v[t[0]], &v[t[1]], &v[t[2]])))
    };
    report.global_bound = options.safety * 2.0 * domain.max_principal_curvature() * area_sigma;
    if active.is_empty() {
        return Ok(report);
    }
    let centers = farthest_point_sample(&active.iter().map(|&i| foot[i]).collect::<Vec<_>>(), options.num_probes);
    let spacing = probe_spacing(&centers);
    let grad = raw_gradient(pair);
    let m = pair.multiplicity as f64;
    let mut gamma_area = vec![0.0; n];
    for t in &pair.gamma_triangles {
        let a = triangle_area(&pair.vertices[t[0]], &pair.vertices[t[1]], &pair.vertices[t[2]]) / 3.0;
        for &k in t {
            gamma_area[k] += m * pair.a * a;
        }
    }
    let mut per_probe = vec![Vec::new(); centers.len()];
    for &i in &active {
        let p = foot[i];
        let normal = domain.normal_at(&p);
        let h_tilde = -domain.boundary_mean_curvature_scalar(&p) * normal;
        let psi = partition_weights(&p, &centers, spacing);
        let x_unit = weight[i] * normal;
        let local = grad[i].dot(&x_unit) + gamma_area[i] * x_unit.dot(&h_tilde);
        for (k, w) in psi.iter().enumerate() {
            if *w > 0.0 {
                per_probe[k].push(w * local);
            }
        }
    }
    report.per_probe = per_probe.into_iter().map(compensated_sum).collect();
    report.sigma_v_estimate = compensated_sum(report.per_probe.iter().copied());
    report.violations = report.per_probe.iter().filter(|&&s| s < -options.tol).count();
    report.bound_holds = report.sigma_v_estimate <= report.global_bound;
    report.probe_centers = centers;
    Ok(report)
}

fn farthest_point_sample(points: &[Vec3], count: usize) -> Vec<Vec3> {
    let mut centers = vec![points[0]];
    let mut dist: Vec<f64> = points.iter().map(|p| (p - points[0]).norm()).collect();
    while centers.len() < count.max(1) {
        let (k, &d) = dist.iter().enumerate().fold((0, &0.0), |b, e| if e.1 > b.1 { e } else { b });
        if d == 0.0 {
            break;
        }
        centers.push(points[k]);
        for (j, p) in points.iter().enumerate() {
            dist[j] = dist[j].min((p - points[k]).norm());
        }
    }
    centers
}

fn probe_spacing(centers: &[Vec3]) -> f64 {
    let mut s: f64 = 0.0;
    for (i, c) in centers.iter().enumerate() {
        let nearest = centers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, d)| (c - d).norm())
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            s = s.max(nearest);
        }
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Normalized Gaussian weights; they sum to one at every point.
fn partition_weights(p: &Vec3, centers: &[Vec3], spacing: f64) -> Vec<f64> {
    let d2: Vec<f64> = centers.iter().map(|c| (p - c).norm_squared() / (spacing * spacing)).collect();
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d2.iter().map(|d| (-(d - min)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
