//! The capillarity functional `F_a = Area(Σ) + a·Area(Γ)` and its exact discrete derivative.

mod curvature;

pub use curvature::{curvature_fields, CurvatureFields};

use crate::domain::ConvexDomain;
use crate::geom::{compensated_sum, triangle_area, triangle_area_gradient, KahanSum, Vec3};
use crate::record::Record;
use crate::surface::{SurfaceError, SurfacePair, VertexRole};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("vector field has normal component {component:e} at wall vertex {vertex}")]
    NotTangential { vertex: usize, component: f64 },
    #[error("curvature fit needs at least 3 neighbour directions at vertex {0}")]
    InsufficientNeighborhood(usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub area_sigma: f64,
    pub area_gamma: f64,
    pub a: f64,
    pub f_a: f64,
    /// Constrained gradient per vertex; empty when only areas were requested.
    pub grad: Vec<Vec3>,
    /// Largest vertex gradient norm.
    pub grad_norm: f64,
    /// Contact-angle residual per contact-polyline vertex; empty unless computed.
    pub contact_residuals: Vec<f64>,
}

impl EnergyReport {
    pub fn max_contact_residual(&self) -> f64 {
        self.contact_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.num("area_sigma", self.area_sigma)
            .num("area_gamma", self.area_gamma)
            .num("a", self.a)
            .num("F_a", self.f_a)
            .num("grad_norm", self.grad_norm)
            .num("max_contact_residual", self.max_contact_residual());
        r
    }
}

fn sheet_area(pair: &SurfacePair, tris: &[[usize; 3]]) -> f64 {
    let v = &pair.vertices;
    compensated_sum(tris.iter().map(|t| triangle_area(&v[t[0]], &v[t[1]], &v[t[2]])))
}

/// Areas and `F_a`; gradient and residual fields are left empty.
pub fn capillarity_energy(pair: &SurfacePair) -> EnergyReport {
    let m = pair.multiplicity as f64;
    let area_sigma = m * sheet_area(pair, &pair.sigma_triangles);
    let area_gamma = m * sheet_area(pair, &pair.gamma_triangles);
    EnergyReport {
        area_sigma,
        area_gamma,
        a: pair.a,
        f_a: area_sigma + pair.a * area_gamma,
        grad: Vec::new(),
        grad_norm: 0.0,
        contact_residuals: Vec::new(),
    }
}

/// Unconstrained derivative of `F_a` with respect to every vertex position.
pub fn raw_gradient(pair: &SurfacePair) -> Vec<Vec3> {
    let n = pair.num_vertices();
    let m = pair.multiplicity as f64;
    let mut acc = vec![[KahanSum::new(), KahanSum::new(), KahanSum::new()]; n];
    let v = &pair.vertices;
    for (tris, w) in [(&pair.sigma_triangles, m), (&pair.gamma_triangles, m * pair.a)] {
        for t in tris.iter() {
            let g = triangle_area_gradient(&v[t[0]], &v[t[1]], &v[t[2]]);
            for k in 0..3 {
                for c in 0..3 {
                    acc[t[k]][c].add(w * g[k][c]);
                }
            }
        }
    }
    acc.iter().map(|s| Vec3::new(s[0].value(), s[1].value(), s[2].value())).collect()
}

/// Projects a per-vertex field onto the admissible directions: zero at pinned
/// vertices, tangential to ∂M at wall vertices.
pub fn constrain(pair: &SurfacePair, domain: &ConvexDomain, field: &mut [Vec3]) {
    for (i, g) in field.iter_mut().enumerate() {
        if pair.pinned[i] {
            *g = Vec3::zeros();
        } else if pair.roles[i].on_wall() {
            let n = domain.normal_at(&pair.vertices[i]);
            *g -= g.dot(&n) * n;
        }
    }
}

/// Gradient of `F_a` on the constraint manifold, with areas and `F_a`.
pub fn energy_gradient(pair: &SurfacePair, domain: &ConvexDomain) -> EnergyReport {
    let mut report = capillarity_energy(pair);
    let mut grad = raw_gradient(pair);
    constrain(pair, domain, &mut grad);
    report.grad_norm = grad.iter().fold(0.0, |m, g| m.max(g.norm()));
    report.grad = grad;
    report
}

/// `d/dt F_a((id + tX)(pair))` at `t = 0`.
///
/// `X` must be tangent to ∂M at Γ and contact vertices.
pub fn first_variation(pair: &SurfacePair, domain: &ConvexDomain, x: &[Vec3]) -> Result<f64, EnergyError> {
    assert_eq!(x.len(), pair.num_vertices());
    for (i, xi) in x.iter().enumerate() {
        if pair.roles[i].on_wall() {
            let n = domain.normal_at(&pair.vertices[i]);
            let c = xi.dot(&n);
            if c.abs() > 1e-8 * xi.norm() {
                return Err(EnergyError::NotTangential { vertex: i, component: c });
            }
        }
    }
    let g = raw_gradient(pair);
    Ok(compensated_sum(g.iter().zip(x).map(|(g, x)| g.dot(x))))
}

/// `η·N − sin θ` at each vertex of the contact polyline, with `η` averaged over the
/// adjacent contact edges and `N` the wall normal at the vertex.
pub fn contact_angle_residual(pair: &SurfacePair, domain: &ConvexDomain) -> Result<Vec<f64>, SurfaceError> {
    let frame = pair.extract_boundary_frame(domain)?;
    let mut sum = vec![0.0; pair.num_vertices()];
    let mut count = vec![0usize; pair.num_vertices()];
    for e in &frame.edges {
        for v in [e.edge.0, e.edge.1] {
            sum[v] += e.eta.dot(&domain.normal_at(&pair.vertices[v]));
            count[v] += 1;
        }
    }
    let s = pair.theta.sin();
    Ok(pair
        .contact_polyline
        .iter()
        .map(|&v| if count[v] == 0 { 0.0 } else { sum[v] / count[v] as f64 - s })
        .collect())
}

/// Energy, gradient and contact residuals in one report.
pub fn full_report(pair: &SurfacePair, domain: &ConvexDomain) -> Result<EnergyReport, SurfaceError> {
    let mut report = energy_gradient(pair, domain);
    report.contact_residuals = contact_angle_residual(pair, domain)?;
    Ok(report)
}

/// Largest constrained-gradient norm over vertices of the given role.
pub fn grad_norm_on(report: &EnergyReport, pair: &SurfacePair, role: VertexRole) -> f64 {
    report
        .grad
        .iter()
        .zip(&pair.roles)
        .filter(|(_, r)| **r == role)
        .fold(0.0, |m, (g, _)| m.max(g.norm()))
}
