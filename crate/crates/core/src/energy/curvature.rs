//! Vertex curvature estimates on Σ.

use super::EnergyError;
use crate::geom::{frame_from_axis, triangle_area, triangle_area_gradient, Vec3};
use crate::surface::{boundary_vertex_set, vertex_neighbors, SurfacePair};
use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct CurvatureFields {
    /// Mean curvature vector (sum of principal curvatures times the normal).
    pub h: Vec<Vec3>,
    /// Squared norm of the second fundamental form.
    pub a2: Vec<f64>,
    /// Unit normal of the fitted quadric, oriented like Σ.
    pub normal: Vec<Vec3>,
    /// Σ vertices away from the boundary of Σ; the others carry one-sided estimates.
    pub interior: Vec<bool>,
}

/// Mean curvature vectors from the area gradient per barycentric area, and `|A|²`
/// from a quadric fitted over the two-ring in the vertex-normal frame.
pub fn curvature_fields(pair: &SurfacePair) -> Result<CurvatureFields, EnergyError> {
    let n = pair.num_vertices();
    let v = &pair.vertices;
    let tris = &pair.sigma_triangles;
    let mut grad = vec![Vec3::zeros(); n];
    let mut area = vec![0.0; n];
    for t in tris {
        let g = triangle_area_gradient(&v[t[0]], &v[t[1]], &v[t[2]]);
        let a = triangle_area(&v[t[0]], &v[t[1]], &v[t[2]]) / 3.0;
        for k in 0..3 {
            grad[t[k]] += g[k];
            area[t[k]] += a;
        }
    }
    let in_sigma = pair.sigma_vertex_set();
    let on_boundary = boundary_vertex_set(n, tris);
    let interior: Vec<bool> = (0..n).map(|i| in_sigma[i] && !on_boundary[i]).collect();
    let h: Vec<Vec3> = (0..n).map(|i| if area[i] > 0.0 { -grad[i] / area[i] } else { Vec3::zeros() }).collect();
    let normals = pair.sigma_vertex_normals();
    let nb = vertex_neighbors(n, tris);
    let fits: Vec<Result<(f64, Vec3), EnergyError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !in_sigma[i] {
                return Ok((0.0, Vec3::zeros()));
            }
            let mut ring: Vec<usize> = nb[i].iter().flat_map(|&j| nb[j].iter().copied().chain([j])).collect();
            ring.sort_unstable();
            ring.dedup();
            ring.retain(|&j| j != i);
            match quadric_a2(&v[i], &normals[i], ring.iter().map(|&j| v[j])) {
                Some(x) => Ok(x),
                None if interior[i] => Err(EnergyError::InsufficientNeighborhood(i)),
                None => Ok((0.0, normals[i])),
            }
        })
        .collect();
    let (a2, normal) = fits.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    Ok(CurvatureFields { h, a2, normal, interior })
}

/// Fits `z = a u² + b uw + c w² + d u + e w` (plus cubic terms) and returns `κ₁² + κ₂²` and the unit
/// normal of the graph at 0.
fn quadric_a2(p: &Vec3, normal: &Vec3, pts: impl Iterator<Item = Vec3>) -> Option<(f64, Vec3)> {
    let (e1, e2) = frame_from_axis(normal);
    let local: Vec<(f64, f64, f64)> = pts
        .map(|q| {
            let d = q - p;
            (d.dot(&e1), d.dot(&e2), d.dot(normal))
        })
        .collect();
    if local.len() < 5 || distinct_directions(&local) < 3 {
        return None;
    }
    let scale = local.iter().map(|(u, w, _)| u.hypot(*w)).fold(0.0, f64::max);
    // Cubic terms absorb the asymmetry of irregular rings when enough points exist.
    let cols = if local.len() >= 12 { 9 } else { 5 };
    let mut m = DMatrix::zeros(local.len(), cols);
    let mut rhs = DVector::zeros(local.len());
    for (r, (u, w, z)) in local.iter().enumerate() {
        let (u, w) = (u / scale, w / scale);
        let row = [u * u, u * w, w * w, u, w, u * u * u, u * u * w, u * w * w, w * w * w];
        for (c, x) in row.iter().take(cols).enumerate() {
            m[(r, c)] = *x;
        }
        rhs[r] = z / scale;
    }
    let sol = m.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let (a, b, c, d, e) = (sol[0] / scale, sol[1] / scale, sol[2] / scale, sol[3], sol[4]);
    let first = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    let second = Matrix2::new(2.0 * a, b, b, 2.0 * c) / (1.0 + d * d + e * e).sqrt();
    let shape = first.try_inverse()? * second;
    let fitted = (normal - d * e1 - e * e2).normalize();
    Some(((shape * shape).trace(), fitted))
}

fn distinct_directions(local: &[(f64, f64, f64)]) -> usize {
    let mut angles: Vec<f64> = local
        .iter()
        .filter(|(u, w, _)| u.hypot(*w) > 0.0)
        .map(|(u, w, _)| w.atan2(*u).rem_euclid(std::f64::consts::PI))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
    angles.len()
}
