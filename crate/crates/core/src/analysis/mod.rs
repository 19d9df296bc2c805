//! Diagnostics on discrete pairs: density ratios, σ_V, the stability form, Jacobi
//! fields, curvature estimates and blow-ups.

mod blowup;
mod monotonicity;
mod stability;

pub use blowup::*;
pub use monotonicity::*;
pub use stability::*;

use crate::domain::DomainError;
use crate::energy::{curvature_fields, EnergyError};
use crate::geom::{triangle_area, Vec3};
use crate::surface::{boundary_vertex_set, vertex_neighbors, SurfaceError, SurfacePair};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("radius {radius} is below the resolution floor {floor}")]
    RadiusTooSmall { radius: f64, floor: f64 },
    #[error("scale {scale} is below the resolution floor {floor}")]
    ScaleBelowResolution { scale: f64, floor: f64 },
    #[error("point {0:?} is not on the domain boundary")]
    NotOnBoundary(Vec3),
    #[error("eigensolver failed: {0}")]
    EigenFailure(&'static str),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("field has {got} values, expected {expected}")]
    FieldLength { got: usize, expected: usize },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Longest edge among the triangles with a vertex in the closed ball `B(x, radius)`.
pub fn local_mesh_size(pair: &SurfacePair, x: &Vec3, radius: f64) -> f64 {
    let v = &pair.vertices;
    pair.sigma_triangles
        .iter()
        .chain(&pair.gamma_triangles)
        .filter(|t| t.iter().any(|&k| (v[k] - x).norm() <= radius))
        .flat_map(|t| [(v[t[0]] - v[t[1]]).norm(), (v[t[1]] - v[t[2]]).norm(), (v[t[2]] - v[t[0]]).norm()])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct JacobiField {
    /// `ν_Σ·e` at Σ vertices, `None` elsewhere.
    pub values: Vec<Option<f64>>,
    pub min: f64,
    pub max: f64,
}

impl JacobiField {
    /// Σ is a graph over the plane orthogonal to `e` when `ν·e < 0` everywhere.
    pub fn graphical(&self) -> bool {
        self.max < 0.0
    }
}

pub fn jacobi_field(pair: &SurfacePair, e: &Vec3) -> JacobiField {
    let e = e.normalize();
    let normals = pair.sigma_vertex_normals();
    let in_sigma = pair.sigma_vertex_set();
    let values: Vec<Option<f64>> = (0..pair.num_vertices()).map(|i| in_sigma[i].then(|| normals[i].dot(&e))).collect();
    let (min, max) = values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    JacobiField { values, min, max }
}

/// Constant of `∫ζ²|A|² ≤ c ∫|∇ζ|²` obtained from the bounds
/// `(1−a)/sinθ ≤ φ ≤ (1+a)/sinθ` on the test multiplier: `c = (1+a)²/(1−a)`.
pub fn stability_constant(a: f64) -> f64 {
    (1.0 + a) * (1.0 + a) / (1.0 - a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub c: f64,
    pub holds: bool,
}

/// Both sides of the stability inequality for a per-vertex test function `ζ`
/// (P1 interpolation; `|A|²` is averaged per triangle).
pub fn stability_inequality_check(pair: &SurfacePair, zeta: &[f64]) -> Result<StabilityInequality, AnalysisError> {
    let n = pair.num_vertices();
    if zeta.len() != n {
        return Err(AnalysisError::FieldLength { got: zeta.len(), expected: n });
    }
    let c = stability_constant(pair.a);
    if zeta.iter().all(|&z| z == 0.0) {
        return Ok(StabilityInequality { lhs: 0.0, rhs: 0.0, c, holds: true });
    }
    let a2 = curvature_fields(pair)?.a2;
    let v = &pair.vertices;
    let mut lhs = 0.0;
    let mut dirichlet = 0.0;
    for t in &pair.sigma_triangles {
        let p = [v[t[0]], v[t[1]], v[t[2]]];
        let area = triangle_area(&p[0], &p[1], &p[2]);
        let z = [zeta[t[0]], zeta[t[1]], zeta[t[2]]];
        let a2m = (a2[t[0]] + a2[t[1]] + a2[t[2]]) / 3.0;
        // ∫ζ² over a P1 triangle.
        let z2 = area / 6.0 * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[0] * z[1] + z[1] * z[2] + z[2] * z[0]);
        lhs += a2m * z2;
        let nrm = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let twice = nrm.norm();
        let nrm = nrm / twice;
        let mut grad = Vec3::zeros();
        for k in 0..3 {
            grad += z[k] * nrm.cross(&(p[(k + 2) % 3] - p[(k + 1) % 3])) / twice;
        }
        dirichlet += area * grad.norm_squared();
    }
    let rhs = c * dirichlet;
    Ok(StabilityInequality { lhs, rhs, c, holds: lhs <= rhs })
}

#[derive(Debug, Clone)]
pub struct CurvatureDistance {
    /// `|A|(x)·dist_Σ(x, ∂Σ∖∂M)` at Σ vertices (0 elsewhere).
    pub product: Vec<f64>,
    pub sup: f64,
    /// Whether Σ has no free boundary, in which case the Euclidean diameter of Σ is used.
    pub used_diameter: bool,
}

/// Graph distance over Σ edges to the boundary vertices of Σ that are not on the wall.
pub fn curvature_distance_product(pair: &SurfacePair) -> Result<CurvatureDistance, AnalysisError> {
    let n = pair.num_vertices();
    let a2 = curvature_fields(pair)?.a2;
    let in_sigma = pair.sigma_vertex_set();
    let on_boundary = boundary_vertex_set(n, &pair.sigma_triangles);
    let sources: Vec<usize> = (0..n).filter(|&i| on_boundary[i] && !pair.roles[i].on_wall()).collect();
    let dist = if sources.is_empty() {
        let pts: Vec<&Vec3> = (0..n).filter(|&i| in_sigma[i]).map(|i| &pair.vertices[i]).collect();
        let mut diam: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                diam = diam.max((*p - *q).norm());
            }
        }
        vec![diam; n]
    } else {
        edge_distances(pair, &sources)
    };
    let product: Vec<f64> = (0..n).map(|i| if in_sigma[i] { a2[i].max(0.0).sqrt() * dist[i] } else { 0.0 }).collect();
    let sup = product.iter().copied().fold(0.0, f64::max);
    Ok(CurvatureDistance { product, sup, used_diameter: sources.is_empty() })
}

fn edge_distances(pair: &SurfacePair, sources: &[usize]) -> Vec<f64> {
    let n = pair.num_vertices();
    let nb = vertex_neighbors(n, &pair.sigma_triangles);
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Reverse((0u64, s)));
    }
    while let Some(Reverse((d_bits, i))) = heap.pop() {
        let d = f64::from_bits(d_bits);
        if d > dist[i] {
            continue;
        }
        for &j in &nb[i] {
            let nd = d + (pair.vertices[i] - pair.vertices[j]).norm();
            if nd < dist[j] {
                dist[j] = nd;
                // Nonnegative floats order like their bit patterns.
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests;
