//! Dilations at a point and least-squares fits of the tangent wedge.

use super::monotonicity::weighted_mass_in_ball;
use super::{local_mesh_size, AnalysisError};
use crate::domain::ConvexDomain;
use crate::geom::{compensated_sum, triangle_ball_area, Vec3};
use crate::record::Record;
use crate::surface::SurfacePair;
use nalgebra::{Matrix3, SymmetricEigen};

/// Smallest admissible scale in units of the local mesh size.
pub const SCALE_FLOOR_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub normal: Vec3,
    /// Clipped-area-weighted centroid (rescaled coordinates).
    pub centroid: Vec3,
    /// RMS distance of the clipped sheet to the plane, in original length units.
    pub rms: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeFit {
    pub sigma: PlaneFit,
    pub gamma: Option<PlaneFit>,
    /// Angle between Σ and the dry side of the wall plane; NaN when Γ is absent.
    pub dihedral: f64,
    pub gamma_empty: bool,
}

#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub point: Vec3,
    pub scales: Vec<f64>,
    pub rescaled: Vec<SurfacePair>,
    pub fits: Vec<WedgeFit>,
    /// Fit at the finest scale.
    pub wedge_fit: WedgeFit,
    /// Dihedral extrapolated linearly in the scale to `ρ → 0` (NaN with fewer than two
    /// Γ fits). The finest-scale fit carries an `O(κρ)` tilt from the wall curvature.
    pub limit_dihedral: f64,
    pub density_at_scale: Vec<f64>,
}

impl BlowupReport {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.num("dihedral_deg", self.wedge_fit.dihedral.to_degrees());
        r.num("limit_dihedral_deg", self.limit_dihedral.to_degrees());
        r.flag("gamma_empty", self.wedge_fit.gamma_empty);
        r.num("rms_sigma", self.wedge_fit.sigma.rms);
        r.num("rms_gamma", self.wedge_fit.gamma.map_or(f64::NAN, |g| g.rms));
        for (i, (s, d)) in self.scales.iter().zip(&self.density_at_scale).enumerate() {
            r.num(&format!("scale_{i}"), *s);
            r.num(&format!("density_{i}"), *d);
        }
        r
    }
}

/// Area-weighted plane fit of the part of a sheet inside the unit ball.
fn fit_sheet(vertices: &[Vec3], tris: &[[usize; 3]], rho: f64) -> Option<PlaneFit> {
    let origin = Vec3::zeros();
    let pieces: Vec<(f64, [Vec3; 3])> = tris
        .iter()
        .filter_map(|t| {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let w = triangle_ball_area(&p[0], &p[1], &p[2], &origin, 1.0);
            (w > 0.0).then_some((w, p))
        })
        .collect();
    let weight = compensated_sum(pieces.iter().map(|(w, _)| *w));
    if weight <= 0.0 {
        return None;
    }
    let centroid = pieces.iter().fold(Vec3::zeros(), |s, (w, p)| s + *w * (p[0] + p[1] + p[2]) / 3.0) / weight;
    // Second moments of each triangle use its vertices and centroid (exact for linear data).
    let mut cov = Matrix3::zeros();
    for (w, p) in &pieces {
        let c = (p[0] + p[1] + p[2]) / 3.0 - centroid;
        let mut m = 9.0 * c * c.transpose();
        for q in p {
            let d = q - centroid;
            m += d * d.transpose();
        }
        cov += *w / 12.0 * m;
    }
    let eig = SymmetricEigen::new(cov / weight);
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned().normalize();
    let rms = eig.eigenvalues[k].max(0.0).sqrt() * rho;
    Some(PlaneFit { normal, centroid, rms, weight })
}

fn wedge_from(sigma: PlaneFit, gamma: Option<PlaneFit>) -> WedgeFit {
    let Some(g) = gamma else {
        return WedgeFit { sigma, gamma: None, dihedral: f64::NAN, gamma_empty: true };
    };
    let line = sigma.normal.cross(&g.normal);
    if line.norm() < 1e-12 {
        return WedgeFit { sigma, gamma: Some(g), dihedral: 0.0, gamma_empty: false };
    }
    let line = line.normalize();
    let in_plane = |c: Vec3, n: Vec3| {
        let u = c - c.dot(&line) * line - c.dot(&n) * n;
        u.normalize()
    };
    let us = in_plane(sigma.centroid, sigma.normal);
    let ug = in_plane(g.centroid, g.normal);
    let wedge = us.cross(&ug).norm().atan2(us.dot(&ug));
    WedgeFit { sigma, gamma: Some(g), dihedral: std::f64::consts::PI - wedge, gamma_empty: false }
}

/// Rescales by `y ↦ (y − x)/ρ` for each scale (sorted decreasing), clips to the unit ball
/// and fits planes to Σ and Γ.
pub fn blowup(
    pair: &SurfacePair,
    _domain: &ConvexDomain,
    x: &Vec3,
    scales: &[f64],
) -> Result<BlowupReport, AnalysisError> {
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.total_cmp(a));
    scales.dedup();
    if scales.is_empty() {
        return Err(AnalysisError::EmptyInput("scales"));
    }
    for &s in &scales {
        let floor = SCALE_FLOOR_FACTOR * local_mesh_size(pair, x, s);
        if s < floor {
            return Err(AnalysisError::ScaleBelowResolution { scale: s, floor });
        }
    }
    let mut rescaled = Vec::new();
    let mut fits = Vec::new();
    let mut density_at_scale = Vec::new();
    for &rho in &scales {
        let p = pair.transformed(1.0 / rho, -x / rho);
        let sigma = fit_sheet(&p.vertices, &p.sigma_triangles, rho).ok_or(AnalysisError::EmptyInput("sigma near point"))?;
        let gamma = fit_sheet(&p.vertices, &p.gamma_triangles, rho);
        fits.push(wedge_from(sigma, gamma));
        density_at_scale.push(weighted_mass_in_ball(&p, &Vec3::zeros(), 1.0));
        rescaled.push(p);
    }
    let wedge_fit = *fits.last().expect("nonempty scales");
    let limit_dihedral = extrapolate_dihedral(&scales, &fits);
    Ok(BlowupReport { point: *x, scales, rescaled, fits, wedge_fit, limit_dihedral, density_at_scale })
}

fn extrapolate_dihedral(scales: &[f64], fits: &[WedgeFit]) -> f64 {
    let pts: Vec<(f64, f64)> =
        scales.iter().zip(fits).filter(|(_, f)| !f.gamma_empty).map(|(s, f)| (*s, f.dihedral)).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}
