//! Analytic seed meshes.

use super::{SurfaceError, SurfacePair, VertexRole};
use crate::domain::{ConvexDomain, DomainKind};
use crate::geom::{frame_from_axis, triangle_normal, Vec3};
use std::f64::consts::{PI, TAU};

/// Target edge length for a given resolution: the equatorial disk of a ball of
/// radius `radius` gets about `resolution²` triangles.
pub fn target_edge_length(radius: f64, resolution: usize) -> f64 {
    radius * (4.0 * PI / 3f64.sqrt()).sqrt() / resolution as f64
}

/// Minimum vertex count on a contact loop.
const MIN_CONTACT_VERTICES: usize = 32;

struct Ring {
    ids: Vec<usize>,
    angles: Vec<f64>,
}

/// Triangulates the annulus between two closed rings ordered by angle.
fn zip_rings(inner: &Ring, outer: &Ring, tris: &mut Vec<[usize; 3]>) {
    let (ni, no) = (inner.ids.len(), outer.ids.len());
    if ni == 1 {
        for k in 0..no {
            tris.push([inner.ids[0], outer.ids[k], outer.ids[(k + 1) % no]]);
        }
        return;
    }
    let next_angle = |r: &Ring, k: usize| if k + 1 < r.ids.len() { r.angles[k + 1] } else { r.angles[0] + TAU };
    let (mut i, mut j) = (0, 0);
    while i < ni || j < no {
        let advance_inner = if i == ni {
            false
        } else if j == no {
            true
        } else {
            next_angle(inner, i) <= next_angle(outer, j)
        };
        if advance_inner {
            tris.push([inner.ids[i], inner.ids[(i + 1) % ni], outer.ids[j % no]]);
            i += 1;
        } else {
            tris.push([inner.ids[i % ni], outer.ids[j], outer.ids[(j + 1) % no]]);
            j += 1;
        }
    }
}

fn ring_angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Flips triangles whose normal disagrees with `wanted(centroid)`.
fn orient(vertices: &[Vec3], tris: &mut [[usize; 3]], wanted: impl Fn(&Vec3) -> Vec3) {
    for t in tris.iter_mut() {
        let n = triangle_normal(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
        let c = (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
        if n.dot(&wanted(&c)) < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn ball_of(domain: &ConvexDomain) -> Result<(Vec3, f64), SurfaceError> {
    match domain.kind {
        DomainKind::Ball { radius } => Ok((domain.center, radius)),
        _ => Err(SurfaceError::WrongDomain("ball")),
    }
}

/// Flat disk `{x·axis = d}` inside a ball together with the spherical region
/// `{x·axis <= d}` of the wall; they share the contact circle of radius `√(R² − d²)`.
///
/// Σ is oriented along `+axis` (out of the wetted region), Γ along the wall normal.
pub fn build_disk_cap(
    domain: &ConvexDomain,
    axis: Vec3,
    d: f64,
    theta: f64,
    resolution: usize,
) -> Result<SurfacePair, SurfaceError> {
    let (center, radius) = ball_of(domain)?;
    if d.abs() >= radius {
        return Err(SurfaceError::InvalidOffset { offset: d.abs(), radius });
    }
    let h = target_edge_length(radius, resolution);
    build_disk_cap_with_spacing(center, radius, axis.normalize(), d, theta, h)
}

pub(crate) fn build_disk_cap_with_spacing(
    center: Vec3,
    radius: f64,
    axis: Vec3,
    d: f64,
    theta: f64,
    h: f64,
) -> Result<SurfacePair, SurfaceError> {
    let (e1, e2) = frame_from_axis(&axis);
    let r = (radius * radius - d * d).sqrt();
    let mut vertices = Vec::new();
    let mut roles = Vec::new();
    let n_contact = ((TAU * r / h).round() as usize).max(MIN_CONTACT_VERTICES);
    let contact_angles = ring_angles(n_contact);
    let contact = Ring {
        ids: (0..n_contact).collect(),
        angles: contact_angles.clone(),
    };
    for phi in &contact_angles {
        vertices.push(center + d * axis + r * (phi.cos() * e1 + phi.sin() * e2));
        roles.push(VertexRole::Contact);
    }

    // Σ: rings from the disk center outwards.
    let rings_sigma = ((r / h).round() as usize).max(1);
    let mut sigma_rings = Vec::new();
    let c_id = vertices.len();
    vertices.push(center + d * axis);
    roles.push(VertexRole::Sigma);
    sigma_rings.push(Ring { ids: vec![c_id], angles: vec![0.0] });
    for j in 1..rings_sigma {
        let rho = r * j as f64 / rings_sigma as f64;
        let n = ((TAU * rho / h).round() as usize).max(6);
        let angles = ring_angles(n);
        let start = vertices.len();
        for phi in &angles {
            vertices.push(center + d * axis + rho * (phi.cos() * e1 + phi.sin() * e2));
            roles.push(VertexRole::Sigma);
        }
        sigma_rings.push(Ring { ids: (start..start + n).collect(), angles });
    }
    sigma_rings.push(Ring { ids: contact.ids.clone(), angles: contact.angles.clone() });
    let mut sigma_tris = Vec::new();
    for w in sigma_rings.windows(2) {
        zip_rings(&w[0], &w[1], &mut sigma_tris);
    }

    // Γ: rings in polar angle from the pole at -axis up to the contact circle.
    let psi_c = (-d / radius).clamp(-1.0, 1.0).acos();
    let rings_gamma = ((radius * psi_c / h).round() as usize).max(1);
    let mut gamma_rings = Vec::new();
    let pole = vertices.len();
    vertices.push(center - radius * axis);
    roles.push(VertexRole::Gamma);
    gamma_rings.push(Ring { ids: vec![pole], angles: vec![0.0] });
    // A thin band next to the contact circle keeps the Γ conormal close to T∂M.
    let dpsi = psi_c / rings_gamma as f64;
    let psis: Vec<f64> = (1..rings_gamma)
        .map(|j| dpsi * j as f64)
        .chain(std::iter::once(psi_c - dpsi / 3.0))
        .collect();
    for psi in psis {
        let n = ((TAU * radius * psi.sin() / h).round() as usize).max(6);
        let angles = ring_angles(n);
        let start = vertices.len();
        for phi in &angles {
            let dir = -psi.cos() * axis + psi.sin() * (phi.cos() * e1 + phi.sin() * e2);
            vertices.push(center + radius * dir);
            roles.push(VertexRole::Gamma);
        }
        gamma_rings.push(Ring { ids: (start..start + n).collect(), angles });
    }
    gamma_rings.push(contact);
    let mut gamma_tris = Vec::new();
    for w in gamma_rings.windows(2) {
        zip_rings(&w[0], &w[1], &mut gamma_tris);
    }

    orient(&vertices, &mut sigma_tris, |_| axis);
    orient(&vertices, &mut gamma_tris, |c| c - center);
    let n = vertices.len();
    Ok(SurfacePair {
        vertices,
        roles,
        pinned: vec![false; n],
        sigma_triangles: sigma_tris,
        gamma_triangles: gamma_tris,
        contact_polyline: (0..n_contact).collect(),
        contact_closed: true,
        multiplicity: 1,
        theta,
        a: theta.cos(),
    })
}

/// Moves a disk-cap pair to offset `d_new` without changing its combinatorics:
/// Σ is rescaled radially, Γ is stretched in polar angle from the far pole.
pub fn shift_disk_cap(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    axis: Vec3,
    d_new: f64,
) -> Result<SurfacePair, SurfaceError> {
    let (center, radius) = ball_of(domain)?;
    if d_new.abs() >= radius {
        return Err(SurfaceError::InvalidOffset { offset: d_new.abs(), radius });
    }
    let axis = axis.normalize();
    let d_old = disk_offset(pair, &center, &axis);
    let r_old = (radius * radius - d_old * d_old).sqrt();
    let r_new = (radius * radius - d_new * d_new).sqrt();
    let psi_old = (-d_old / radius).clamp(-1.0, 1.0).acos();
    let psi_new = (-d_new / radius).clamp(-1.0, 1.0).acos();
    let mut out = pair.clone();
    for (i, v) in out.vertices.iter_mut().enumerate() {
        let y = *v - center;
        let s = y.dot(&axis);
        let w = y - s * axis;
        *v = match pair.roles[i] {
            VertexRole::Sigma | VertexRole::Contact => center + d_new * axis + w * (r_new / r_old),
            VertexRole::Gamma => {
                let psi = (-s / radius).clamp(-1.0, 1.0).acos() * psi_new / psi_old;
                let dir = if w.norm() > 0.0 { w.normalize() } else { Vec3::zeros() };
                center + radius * (-psi.cos() * axis + psi.sin() * dir)
            }
        };
    }
    Ok(out)
}

/// Offset of the disk along its axis for a given pair (mean of the Σ vertices).
pub fn disk_offset(pair: &SurfacePair, center: &Vec3, axis: &Vec3) -> f64 {
    let sigma = pair.sigma_vertex_set();
    let (sum, count) = pair
        .vertices
        .iter()
        .zip(sigma.iter())
        .filter(|(_, s)| **s)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + (v - center).dot(axis), c + 1));
    sum / count as f64
}

/// Flat disk (Σ only) with a pinned rim.
pub fn build_flat_disk(center: Vec3, normal: Vec3, radius: f64, resolution: usize, theta: f64) -> SurfacePair {
    let normal = normal.normalize();
    let (e1, e2) = frame_from_axis(&normal);
    let h = target_edge_length(radius, resolution);
    let rings = ((radius / h).round() as usize).max(1);
    let mut vertices = vec![center];
    let mut pinned = vec![false];
    let mut ring_list = vec![Ring { ids: vec![0], angles: vec![0.0] }];
    for j in 1..=rings {
        let rho = radius * j as f64 / rings as f64;
        let n = ((TAU * rho / h).round() as usize).max(if j == rings { MIN_CONTACT_VERTICES } else { 6 });
        let angles = ring_angles(n);
        let start = vertices.len();
        for phi in &angles {
            vertices.push(center + rho * (phi.cos() * e1 + phi.sin() * e2));
            pinned.push(j == rings);
        }
        ring_list.push(Ring { ids: (start..start + n).collect(), angles });
    }
    let mut tris = Vec::new();
    for w in ring_list.windows(2) {
        zip_rings(&w[0], &w[1], &mut tris);
    }
    orient(&vertices, &mut tris, |_| normal);
    SurfacePair::sigma_only(vertices, tris, pinned, theta)
}

/// Square `n × n` cell grid spanned by `e1, e2` from `origin`, boundary pinned.
pub fn build_square_patch(origin: Vec3, e1: Vec3, e2: Vec3, size: f64, cells: usize, theta: f64) -> SurfacePair {
    let n = cells + 1;
    let mut vertices = Vec::with_capacity(n * n);
    let mut pinned = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let u = size * i as f64 / cells as f64;
            let v = size * j as f64 / cells as f64;
            vertices.push(origin + u * e1 + v * e2);
            pinned.push(i == 0 || j == 0 || i == cells || j == cells);
        }
    }
    let mut tris = Vec::new();
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n + i;
            let b = a + 1;
            let c = a + n;
            let d = c + 1;
            if (i + j) % 2 == 0 {
                tris.push([a, b, d]);
                tris.push([a, d, c]);
            } else {
                tris.push([a, b, c]);
                tris.push([b, d, c]);
            }
        }
    }
    let normal = e1.cross(&e2);
    orient(&vertices, &mut tris, |_| normal);
    SurfacePair::sigma_only(vertices, tris, pinned, theta)
}

/// Spherical cap of polar extent `psi_max < π` around `pole` (Σ only, rim pinned).
///
/// A regular triangular lattice in the tangent plane at the pole is wrapped onto the
/// sphere by the azimuthal equidistant map, so every interior vertex has valence six.
/// With `outward == false` the normals point to the sphere center.
pub fn build_sphere_patch(
    center: Vec3,
    radius: f64,
    pole: Vec3,
    psi_max: f64,
    resolution: usize,
    outward: bool,
    theta: f64,
) -> SurfacePair {
    let pole = pole.normalize();
    let (e1, e2) = frame_from_axis(&pole);
    let step = target_edge_length(radius, resolution) / radius;
    let (plane, tris) = lattice_disk(psi_max, step);
    let vertices: Vec<Vec3> = plane
        .iter()
        .map(|&(u, w)| {
            let psi = u.hypot(w);
            let dir = if psi > 0.0 { (u * e1 + w * e2) / psi } else { Vec3::zeros() };
            center + radius * (psi.cos() * pole + psi.sin() * dir)
        })
        .collect();
    let pinned = super::boundary_vertex_set(vertices.len(), &tris);
    let mut tris = tris;
    let sign = if outward { 1.0 } else { -1.0 };
    orient(&vertices, &mut tris, |c| sign * (c - center));
    SurfacePair::sigma_only(vertices, tris, pinned, theta)
}

/// Triangles of the regular lattice with spacing `step` lying in the disk of radius
/// `extent` around the origin, with compacted vertex indices.
fn lattice_disk(extent: f64, step: f64) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let k = (extent / step).ceil() as i64 + 2;
    let s = 3f64.sqrt() / 2.0;
    let point = |i: i64, j: i64| ((i as f64 + 0.5 * j as f64) * step, j as f64 * s * step);
    let inside = |p: (f64, f64)| p.0.hypot(p.1) <= extent * (1.0 + 1e-12);
    let mut index = std::collections::HashMap::new();
    let mut pts = Vec::new();
    let mut tris = Vec::new();
    let mut id = |i: i64, j: i64, pts: &mut Vec<(f64, f64)>| {
        *index.entry((i, j)).or_insert_with(|| {
            pts.push(point(i, j));
            pts.len() - 1
        })
    };
    for j in -k..=k {
        for i in -2 * k..=2 * k {
            for c in [[(i, j), (i + 1, j), (i, j + 1)], [(i + 1, j), (i + 1, j + 1), (i, j + 1)]] {
                if c.iter().all(|&(a, b)| inside(point(a, b))) {
                    tris.push([id(c[0].0, c[0].1, &mut pts), id(c[1].0, c[1].1, &mut pts), id(c[2].0, c[2].1, &mut pts)]);
                }
            }
        }
    }
    (pts, tris)
}

/// Piece of the cylinder `x² + y² = radius²` (axis z), rim pinned, outward normals.
pub fn build_cylinder_patch(radius: f64, arc: f64, length: f64, cells: usize, theta: f64) -> SurfacePair {
    let n_phi = cells;
    let n_z = ((length / (radius * arc / cells as f64)).round() as usize).max(2);
    let mut vertices = Vec::new();
    let mut pinned = Vec::new();
    for j in 0..=n_z {
        for i in 0..=n_phi {
            let phi = -0.5 * arc + arc * i as f64 / n_phi as f64;
            let z = -0.5 * length + length * j as f64 / n_z as f64;
            vertices.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), z));
            pinned.push(i == 0 || j == 0 || i == n_phi || j == n_z);
        }
    }
    let w = n_phi + 1;
    let mut tris = Vec::new();
    for j in 0..n_z {
        for i in 0..n_phi {
            let a = j * w + i;
            let (b, c, d) = (a + 1, a + w, a + w + 1);
            if (i + j) % 2 == 0 {
                tris.push([a, b, d]);
                tris.push([a, d, c]);
            } else {
                tris.push([a, b, c]);
                tris.push([b, d, c]);
            }
        }
    }
    orient(&vertices, &mut tris, |c| Vec3::new(c.x, c.y, 0.0));
    SurfacePair::sigma_only(vertices, tris, pinned, theta)
}

/// Planar capillary wedge over the flat wall `{z = 0}` of `M = {z >= 0}`.
///
/// The contact line is the y-axis segment `|y| <= 1/2`. Σ leaves the wall at angle
/// `theta` over the dry side `x > 0` and extends a unit distance; Γ is the wetted
/// strip `-1/2 <= x <= 0`. Every outer rim vertex, including both ends of the contact
/// line, is pinned on the exact linear configuration.
pub fn build_capillary_wedge(theta: f64, cells: usize) -> (ConvexDomain, SurfacePair) {
    let domain = ConvexDomain::half_space(Vec3::zeros(), -Vec3::z());
    let ny = cells + 1;
    let ns = cells;
    let ng = (cells / 2).max(1);
    let dir = Vec3::new(theta.cos(), 0.0, theta.sin());
    let mut vertices = Vec::new();
    let mut roles = Vec::new();
    let mut pinned = Vec::new();
    let y_of = |i: usize| -0.5 + i as f64 / cells as f64;
    // row 0 is the contact line
    for i in 0..ny {
        vertices.push(Vec3::new(0.0, y_of(i), 0.0));
        roles.push(VertexRole::Contact);
        pinned.push(i == 0 || i == cells);
    }
    let mut sigma_rows = vec![(0..ny).collect::<Vec<_>>()];
    for k in 1..=ns {
        let s = k as f64 / ns as f64;
        let start = vertices.len();
        for i in 0..ny {
            vertices.push(Vec3::new(0.0, y_of(i), 0.0) + s * dir);
            roles.push(VertexRole::Sigma);
            pinned.push(k == ns || i == 0 || i == cells);
        }
        sigma_rows.push((start..start + ny).collect());
    }
    let mut gamma_rows = vec![(0..ny).collect::<Vec<_>>()];
    for k in 1..=ng {
        let x = -0.5 * k as f64 / ng as f64;
        let start = vertices.len();
        for i in 0..ny {
            vertices.push(Vec3::new(x, y_of(i), 0.0));
            roles.push(VertexRole::Gamma);
            pinned.push(k == ng || i == 0 || i == cells);
        }
        gamma_rows.push((start..start + ny).collect());
    }
    let grid = |rows: &[Vec<usize>]| {
        let mut tris = Vec::new();
        for (k, w) in rows.windows(2).enumerate() {
            for i in 0..cells {
                let (a, b, c, d) = (w[0][i], w[0][i + 1], w[1][i], w[1][i + 1]);
                if (i + k) % 2 == 0 {
                    tris.push([a, b, d]);
                    tris.push([a, d, c]);
                } else {
                    tris.push([a, b, c]);
                    tris.push([b, d, c]);
                }
            }
        }
        tris
    };
    let mut sigma_tris = grid(&sigma_rows);
    let mut gamma_tris = grid(&gamma_rows);
    let sigma_normal = Vec3::new(theta.sin(), 0.0, -theta.cos());
    orient(&vertices, &mut sigma_tris, |_| sigma_normal);
    orient(&vertices, &mut gamma_tris, |_| -Vec3::z());
    let pair = SurfacePair {
        vertices,
        roles,
        pinned,
        sigma_triangles: sigma_tris,
        gamma_triangles: gamma_tris,
        contact_polyline: (0..ny).collect(),
        contact_closed: false,
        multiplicity: 1,
        theta,
        a: theta.cos(),
    };
    (domain, pair)
}

/// Unit normal of the exact wedge plane built by [`build_capillary_wedge`].
pub fn capillary_wedge_plane_normal(theta: f64) -> Vec3 {
    Vec3::new(theta.sin(), 0.0, -theta.cos())
}

/// Lifts free Σ vertices by a pyramid of given height along `direction`,
/// decaying linearly to zero at distance `radius` from `apex`.
pub fn add_pyramid_bump(pair: &SurfacePair, apex: Vec3, radius: f64, height: f64, direction: Vec3) -> SurfacePair {
    let mut out = pair.clone();
    for (i, v) in out.vertices.iter_mut().enumerate() {
        if pair.roles[i] != VertexRole::Sigma || pair.pinned[i] {
            continue;
        }
        let r = (*v - apex).norm();
        if r < radius {
            *v += height * (1.0 - r / radius) * direction;
        }
    }
    out
}
