//! The discrete pair (Σ, Γ).
//!
//! Both sheets live in one vertex pool. Σ vertices are free in space, Γ vertices
//! are constrained to ∂M, and contact vertices belong to both sheets and form the
//! shared polyline ∂Σ = ∂Γ. Any other boundary of either sheet must be pinned.

mod build;
mod obj;

pub use build::*;
pub use obj::write_obj;

use crate::domain::ConvexDomain;
use crate::geom::{triangle_area, triangle_normal, Vec3};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("offset |d| = {offset} must be smaller than the radius {radius}")]
    InvalidOffset { offset: f64, radius: f64 },
    #[error("contact edge ({0}, {1}) lacks an adjacent triangle on {2}")]
    DanglingContactEdge(usize, usize, &'static str),
    #[error("meshes are combinatorially different")]
    IncompatibleMeshes,
    #[error("surface builder requires a {0} domain")]
    WrongDomain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexRole {
    /// Free vertex of Σ.
    Sigma,
    /// Vertex of Γ, constrained to ∂M.
    Gamma,
    /// Vertex of the contact polyline, in both sheets and constrained to ∂M.
    Contact,
}

impl VertexRole {
    pub fn on_wall(self) -> bool {
        matches!(self, VertexRole::Gamma | VertexRole::Contact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePair {
    pub vertices: Vec<Vec3>,
    pub roles: Vec<VertexRole>,
    /// Pinned vertices never move (Dirichlet rim of a patch).
    pub pinned: Vec<bool>,
    pub sigma_triangles: Vec<[usize; 3]>,
    pub gamma_triangles: Vec<[usize; 3]>,
    /// Ordered contact vertices.
    pub contact_polyline: Vec<usize>,
    pub contact_closed: bool,
    pub multiplicity: u32,
    pub theta: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BoundaryViolation { vertex: usize, distance: f64 },
    NonManifold { triangle: usize, detail: String },
    Orientation { edge: (usize, usize) },
    Degenerate { triangle: usize, area: f64 },
    ContactMismatch { detail: String },
    UnpinnedBoundary { edge: (usize, usize) },
    RoleMismatch { vertex: usize },
    AngleMismatch { theta: f64, a: f64 },
}

/// Per-contact-edge frame.
#[derive(Debug, Clone)]
pub struct EdgeFrame {
    pub edge: (usize, usize),
    pub eta: Vec3,
    pub zeta: Vec3,
    pub normal: Vec3,
    pub tau: Vec3,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    pub edges: Vec<EdgeFrame>,
}

impl SurfacePair {
    /// Σ-only pair (Γ empty), used for patches and analysis meshes.
    pub fn sigma_only(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, pinned: Vec<bool>, theta: f64) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            roles: vec![VertexRole::Sigma; n],
            pinned,
            sigma_triangles: triangles,
            gamma_triangles: Vec::new(),
            contact_polyline: Vec::new(),
            contact_closed: false,
            multiplicity: 1,
            theta,
            a: theta.cos(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Vertex positions mapped by `x -> λ x + shift`.
    pub fn transformed(&self, scale: f64, shift: Vec3) -> Self {
        let mut out = self.clone();
        for v in out.vertices.iter_mut() {
            *v = *v * scale + shift;
        }
        out
    }

    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut out = self.clone();
        out.vertices = vertices;
        out
    }

    pub fn contact_edges(&self) -> Vec<(usize, usize)> {
        let c = &self.contact_polyline;
        if c.len() < 2 {
            return Vec::new();
        }
        let mut edges: Vec<_> = c.windows(2).map(|w| (w[0], w[1])).collect();
        if self.contact_closed {
            edges.push((c[c.len() - 1], c[0]));
        }
        edges
    }

    pub fn sigma_vertex_set(&self) -> Vec<bool> {
        mark_vertices(self.num_vertices(), &self.sigma_triangles)
    }

    pub fn gamma_vertex_set(&self) -> Vec<bool> {
        mark_vertices(self.num_vertices(), &self.gamma_triangles)
    }

    /// Largest edge length over both sheets.
    pub fn max_edge_length(&self) -> f64 {
        self.sigma_triangles
            .iter()
            .chain(self.gamma_triangles.iter())
            .flat_map(|t| {
                let v = &self.vertices;
                [
                    (v[t[0]] - v[t[1]]).norm(),
                    (v[t[1]] - v[t[2]]).norm(),
                    (v[t[2]] - v[t[0]]).norm(),
                ]
            })
            .fold(0.0, f64::max)
    }

    /// Per-vertex (area-weighted) unit normals of Σ.
    pub fn sigma_vertex_normals(&self) -> Vec<Vec3> {
        vertex_normals(&self.vertices, &self.sigma_triangles)
    }

    /// Enclosed volume of the closed surface Σ ∪ Γ by the divergence theorem.
    ///
    /// Σ must point out of the enclosed region and Γ along the wall normal.
    pub fn enclosed_volume(&self, origin: &Vec3) -> f64 {
        crate::geom::compensated_sum(
            self.sigma_triangles.iter().chain(self.gamma_triangles.iter()).map(|t| {
                let p0 = self.vertices[t[0]] - origin;
                let p1 = self.vertices[t[1]] - origin;
                let p2 = self.vertices[t[2]] - origin;
                p0.dot(&p1.cross(&p2)) / 6.0
            }),
        )
    }

    /// Reports every invariant violation; empty iff the pair is valid.
    pub fn validate(&self, domain: &ConvexDomain) -> Vec<Violation> {
        let mut out = Vec::new();
        let tol = domain.tol_boundary();
        for (i, v) in self.vertices.iter().enumerate() {
            if self.roles[i].on_wall() {
                let d = domain.signed_distance(v);
                if d.abs() > tol {
                    out.push(Violation::BoundaryViolation { vertex: i, distance: d });
                }
            }
        }
        if (self.a - self.theta.cos()).abs() > 1e-15 || !(self.theta > 0.0 && self.theta <= std::f64::consts::FRAC_PI_2) {
            out.push(Violation::AngleMismatch { theta: self.theta, a: self.a });
        }
        let min_area = 1e-14 * domain.bounding_radius().powi(2);
        let sigma = check_sheet(self, &self.sigma_triangles, min_area, &mut out, 0);
        let gamma = check_sheet(self, &self.gamma_triangles, min_area, &mut out, self.sigma_triangles.len());

        // Roles: Σ-only vertices never touch Γ and vice versa.
        let in_s = self.sigma_vertex_set();
        let in_g = self.gamma_vertex_set();
        for i in 0..self.num_vertices() {
            let ok = match self.roles[i] {
                VertexRole::Sigma => !in_g[i],
                VertexRole::Gamma => !in_s[i],
                VertexRole::Contact => in_s[i] && in_g[i],
            };
            if !ok {
                out.push(Violation::RoleMismatch { vertex: i });
            }
        }

        // Contact polyline: boundary of both sheets, edge for edge.
        let contact: HashSet<(usize, usize)> = self.contact_edges().into_iter().map(undirected).collect();
        for e in &contact {
            if !sigma.contains(e) || !gamma.contains(e) {
                out.push(Violation::ContactMismatch {
                    detail: format!("contact edge {e:?} is not a boundary edge of both sheets"),
                });
            }
        }
        for (boundary, name) in [(&sigma, "sigma"), (&gamma, "gamma")] {
            for e in boundary.iter() {
                if contact.contains(e) {
                    continue;
                }
                let touches_contact = self.roles[e.0] == VertexRole::Contact && self.roles[e.1] == VertexRole::Contact;
                if touches_contact && !(self.pinned[e.0] && self.pinned[e.1]) {
                    out.push(Violation::ContactMismatch {
                        detail: format!("{name} boundary edge {e:?} joins contact vertices but is not on the polyline"),
                    });
                } else if !(self.pinned[e.0] && self.pinned[e.1]) {
                    out.push(Violation::UnpinnedBoundary { edge: *e });
                }
            }
        }
        out
    }

    /// 1 → 4 split of every triangle with boundary reprojection.
    ///
    /// Midpoints of Γ edges are projected to ∂M; midpoints of contact edges are
    /// moved along the Σ conormal so that they stay in the plane of their Σ triangle.
    pub fn refine(&self, domain: &ConvexDomain) -> SurfacePair {
        let mut vertices = self.vertices.clone();
        let mut roles = self.roles.clone();
        let mut pinned = self.pinned.clone();
        let contact: HashSet<(usize, usize)> = self.contact_edges().into_iter().map(undirected).collect();
        let sigma_boundary = boundary_edges(&self.sigma_triangles);
        let gamma_boundary = boundary_edges(&self.gamma_triangles);
        let sigma_frames: HashMap<(usize, usize), Vec3> = self
            .contact_edges()
            .into_iter()
            .filter_map(|(i, j)| {
                sigma_conormal(&self.vertices, &self.sigma_triangles, i, j).map(|eta| (undirected((i, j)), eta))
            })
            .collect();

        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut split = |i: usize, j: usize, in_gamma: bool| -> usize {
            let key = undirected((i, j));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let mid = 0.5 * (vertices[i] + vertices[j]);
            let is_contact = contact.contains(&key);
            let boundary = if in_gamma { gamma_boundary.contains(&key) } else { sigma_boundary.contains(&key) };
            let pin = boundary && !is_contact && pinned[i] && pinned[j];
            let (pos, role) = if is_contact {
                let eta = sigma_frames[&key];
                (project_along(domain, &mid, &eta), VertexRole::Contact)
            } else if in_gamma {
                (domain.project_to_boundary(&mid).unwrap_or(mid), VertexRole::Gamma)
            } else {
                (mid, VertexRole::Sigma)
            };
            let idx = vertices.len();
            vertices.push(pos);
            roles.push(role);
            pinned.push(pin);
            midpoint.insert(key, idx);
            idx
        };
        let mut sigma_tris = Vec::with_capacity(4 * self.sigma_triangles.len());
        for t in &self.sigma_triangles {
            let m01 = split(t[0], t[1], false);
            let m12 = split(t[1], t[2], false);
            let m20 = split(t[2], t[0], false);
            sigma_tris.extend_from_slice(&[[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]);
        }
        let mut gamma_tris = Vec::with_capacity(4 * self.gamma_triangles.len());
        for t in &self.gamma_triangles {
            let m01 = split(t[0], t[1], true);
            let m12 = split(t[1], t[2], true);
            let m20 = split(t[2], t[0], true);
            gamma_tris.extend_from_slice(&[[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]);
        }
        let mut polyline = Vec::with_capacity(2 * self.contact_polyline.len());
        let c = &self.contact_polyline;
        for k in 0..c.len() {
            polyline.push(c[k]);
            let next = if k + 1 < c.len() {
                Some(c[k + 1])
            } else if self.contact_closed && c.len() > 1 {
                Some(c[0])
            } else {
                None
            };
            if let Some(n) = next {
                polyline.push(midpoint[&undirected((c[k], n))]);
            }
        }
        SurfacePair {
            vertices,
            roles,
            pinned,
            sigma_triangles: sigma_tris,
            gamma_triangles: gamma_tris,
            contact_polyline: polyline,
            contact_closed: self.contact_closed,
            multiplicity: self.multiplicity,
            theta: self.theta,
            a: self.a,
        }
    }

    /// Discrete conormals of Σ and Γ along each contact edge.
    pub fn extract_boundary_frame(&self, domain: &ConvexDomain) -> Result<BoundaryFrame, SurfaceError> {
        let mut edges = Vec::new();
        for (i, j) in self.contact_edges() {
            let eta = sigma_conormal(&self.vertices, &self.sigma_triangles, i, j)
                .ok_or(SurfaceError::DanglingContactEdge(i, j, "sigma"))?;
            let zeta = sigma_conormal(&self.vertices, &self.gamma_triangles, i, j)
                .ok_or(SurfaceError::DanglingContactEdge(i, j, "gamma"))?;
            let d = self.vertices[j] - self.vertices[i];
            let length = d.norm();
            let tau = d / length;
            let mid = 0.5 * (self.vertices[i] + self.vertices[j]);
            let foot = domain.project_to_boundary(&mid).unwrap_or(mid);
            let normal = domain.normal_at(&foot);
            edges.push(EdgeFrame { edge: (i, j), eta, zeta, normal, tau, length });
        }
        Ok(BoundaryFrame { edges })
    }
}

/// Sorted one-ring neighbour lists.
pub fn vertex_neighbors(n: usize, tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            nb[t[k]].push(t[(k + 1) % 3]);
            nb[t[k]].push(t[(k + 2) % 3]);
        }
    }
    for l in nb.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    nb
}

/// Vertices lying on a boundary edge of the given sheet.
pub fn boundary_vertex_set(n: usize, tris: &[[usize; 3]]) -> Vec<bool> {
    let mut out = vec![false; n];
    for (i, j) in boundary_edges(tris) {
        out[i] = true;
        out[j] = true;
    }
    out
}

fn mark_vertices(n: usize, tris: &[[usize; 3]]) -> Vec<bool> {
    let mut m = vec![false; n];
    for t in tris {
        for &v in t {
            m[v] = true;
        }
    }
    m
}

pub(crate) fn undirected(e: (usize, usize)) -> (usize, usize) {
    if e.0 < e.1 {
        e
    } else {
        (e.1, e.0)
    }
}

/// Undirected edges that belong to exactly one triangle.
pub fn boundary_edges(tris: &[[usize; 3]]) -> HashSet<(usize, usize)> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            *count.entry(undirected((t[k], t[(k + 1) % 3]))).or_default() += 1;
        }
    }
    count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect()
}

/// Manifold, orientation and degeneracy checks for one sheet; returns its boundary edges.
fn check_sheet(
    pair: &SurfacePair,
    tris: &[[usize; 3]],
    min_area: f64,
    out: &mut Vec<Violation>,
    index_offset: usize,
) -> HashSet<(usize, usize)> {
    let mut seen: HashSet<[usize; 3]> = HashSet::new();
    let mut unique = Vec::with_capacity(tris.len());
    for (k, t) in tris.iter().enumerate() {
        let mut key = *t;
        key.sort_unstable();
        if key[0] == key[1] || key[1] == key[2] {
            out.push(Violation::NonManifold { triangle: k + index_offset, detail: "repeated vertex".into() });
            continue;
        }
        if !seen.insert(key) {
            out.push(Violation::NonManifold { triangle: k + index_offset, detail: "duplicated triangle".into() });
            continue;
        }
        let area = triangle_area(&pair.vertices[t[0]], &pair.vertices[t[1]], &pair.vertices[t[2]]);
        if area < min_area {
            out.push(Violation::Degenerate { triangle: k + index_offset, area });
        }
        unique.push(*t);
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &unique {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut reported = HashSet::new();
    let mut edges: Vec<_> = directed.keys().copied().collect();
    edges.sort_unstable();
    for (i, j) in edges {
        let key = undirected((i, j));
        if !reported.insert(key) {
            continue;
        }
        let fwd = directed.get(&(key.0, key.1)).copied().unwrap_or(0);
        let bwd = directed.get(&(key.1, key.0)).copied().unwrap_or(0);
        if fwd + bwd > 2 {
            out.push(Violation::NonManifold { triangle: usize::MAX, detail: format!("edge {key:?} has {} faces", fwd + bwd) });
        } else if fwd == 2 || bwd == 2 {
            // an interior edge must be traversed once in each direction
            out.push(Violation::Orientation { edge: key });
        }
    }
    boundary_edges(&unique)
}

/// Outward unit conormal of the sheet triangle containing edge (i, j).
pub(crate) fn sigma_conormal(vertices: &[Vec3], tris: &[[usize; 3]], i: usize, j: usize) -> Option<Vec3> {
    let t = tris.iter().find(|t| t.contains(&i) && t.contains(&j))?;
    let third = t.iter().copied().find(|&v| v != i && v != j)?;
    let p = vertices[i];
    let q = vertices[j];
    let r = vertices[third];
    let tau = (q - p).normalize();
    let n = triangle_normal(&p, &q, &r);
    let mut eta = tau.cross(&n).normalize();
    if (r - p).dot(&eta) > 0.0 {
        eta = -eta;
    }
    Some(eta)
}

pub(crate) fn vertex_normals(vertices: &[Vec3], tris: &[[usize; 3]]) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); vertices.len()];
    for t in tris {
        let tn = triangle_normal(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
        for &v in t {
            n[v] += tn;
        }
    }
    n.into_iter()
        .map(|v| if v.norm() > 0.0 { v.normalize() } else { v })
        .collect()
}

/// Moves `x` along the line `x + t dir` onto ∂M (closest crossing); falls back to
/// the closest-point projection when the line misses the wall.
pub(crate) fn project_along(domain: &ConvexDomain, x: &Vec3, dir: &Vec3) -> Vec3 {
    let mut t = 0.0;
    for _ in 0..50 {
        let p = x + t * dir;
        let d = domain.signed_distance(&p);
        if d.abs() <= 1e-15 * domain.bounding_radius() {
            return p;
        }
        let foot = domain.project_to_boundary(&p).unwrap_or(p);
        let slope = domain.normal_at(&foot).dot(dir);
        if slope.abs() < 1e-3 {
            break;
        }
        t -= d / slope;
    }
    let p = x + t * dir;
    if domain.signed_distance(&p).abs() <= domain.tol_boundary() * 1e-3 {
        p
    } else {
        domain.project_to_boundary(x).unwrap_or(*x)
    }
}
