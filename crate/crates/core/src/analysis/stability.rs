//! Second variation of `F_a` on Σ: P1 assembly of
//! `Q(u) = ∫|∇u|² − |A|²u² − ∮ q u²` and its generalized eigenproblem.

use super::AnalysisError;
use crate::domain::ConvexDomain;
use crate::energy::curvature_fields;
use crate::geom::{triangle_area, Vec3};
use crate::record::Record;
use crate::surface::{vertex_neighbors, SurfacePair};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub const TOL_EIG: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions {
    /// Drops the contact-line term (controls and pinned patches).
    pub force_q_zero: bool,
    pub num_eigs: usize,
    pub tol_eig: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { force_q_zero: false, num_eigs: 6, tol_eig: TOL_EIG }
    }
}

/// Contact-line coefficient `q = H_∂M / sinθ + cotθ H_Σ − κ_∂Σ` at one polyline vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactCoefficient {
    pub vertex: usize,
    pub h_wall: f64,
    pub h_sigma: f64,
    pub kappa: f64,
    pub q: f64,
}

/// Assembled forms on the free Σ vertices (pinned vertices carry Dirichlet conditions).
#[derive(Debug, Clone)]
pub struct StabilityForm {
    /// Mesh vertex of each degree of freedom.
    pub dofs: Vec<usize>,
    pub index: Vec<Option<usize>>,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub curvature_mass: DMatrix<f64>,
    pub boundary: DMatrix<f64>,
    pub q_field: Vec<ContactCoefficient>,
    pub a2_field: Vec<f64>,
}

impl StabilityForm {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.stiffness - &self.curvature_mass - &self.boundary
    }

    fn restrict(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dofs.len(), self.dofs.iter().map(|&v| u[v]))
    }

    /// `Q(u)` for a per-vertex field (values at pinned vertices are ignored).
    pub fn quadratic(&self, u: &[f64]) -> f64 {
        let x = self.restrict(u);
        x.dot(&(self.matrix() * &x))
    }

    /// `∫ u²` for a per-vertex field.
    pub fn mass_norm2(&self, u: &[f64]) -> f64 {
        let x = self.restrict(u);
        x.dot(&(&self.mass * &x))
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub eigenvalues: Vec<f64>,
    /// Per-vertex eigenfunctions for the reported eigenvalues (zero at pinned vertices).
    pub eigenvectors: Vec<Vec<f64>>,
    pub q_field: Vec<ContactCoefficient>,
    pub a2_field: Vec<f64>,
    pub num_near_zero: usize,
    pub tol_eig: f64,
    pub max_asymmetry: f64,
}

impl StabilityReport {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        for (i, l) in self.eigenvalues.iter().enumerate() {
            r.num(&format!("eigenvalue_{i}"), *l);
        }
        r.int("num_near_zero", self.num_near_zero as i64);
        r.num("tol_eig", self.tol_eig);
        r.num("max_asymmetry", self.max_asymmetry);
        r
    }
}

/// P1 gradients of the three hat functions on a triangle, and its area.
fn hat_gradients(p: [&Vec3; 3]) -> ([Vec3; 3], f64) {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice = n.norm();
    let n = n / twice;
    let g = [0, 1, 2].map(|k| {
        let e = p[(k + 2) % 3] - p[(k + 1) % 3];
        n.cross(&e) / twice
    });
    (g, 0.5 * twice)
}

fn contact_coefficients(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    h_vec: &[Vec3],
    interior: &[bool],
) -> Result<Vec<ContactCoefficient>, AnalysisError> {
    let frame = pair.extract_boundary_frame(domain)?;
    let normals = pair.sigma_vertex_normals();
    let nb = vertex_neighbors(pair.num_vertices(), &pair.sigma_triangles);
    let (sin_t, cos_t) = pair.theta.sin_cos();
    let c = &pair.contact_polyline;
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for (k, &v) in c.iter().enumerate() {
        let has_prev = pair.contact_closed || k > 0;
        let has_next = pair.contact_closed || k + 1 < n;
        let prev = c[(k + n - 1) % n];
        let next = c[(k + 1) % n];
        let mut eta = Vec3::zeros();
        for e in &frame.edges {
            if e.edge.0 == v || e.edge.1 == v {
                eta += e.eta;
            }
        }
        let eta = eta.normalize();
        let nu = normals[v];
        let tangent = |w: Vec3| {
            let t = w - w.dot(&nu) * nu;
            t.normalize()
        };
        let kappa = if has_prev && has_next {
            let e1 = pair.vertices[v] - pair.vertices[prev];
            let e2 = pair.vertices[next] - pair.vertices[v];
            let (t1, t2) = (tangent(e1), tangent(e2));
            let turn = t1.cross(&t2).norm().atan2(t1.dot(&t2));
            let dual = 0.5 * (e1.norm() + e2.norm());
            // Turning away from η bends ∂Σ around Σ: positive geodesic curvature.
            if (t2 - t1).dot(&eta) <= 0.0 {
                turn / dual
            } else {
                -turn / dual
            }
        } else {
            0.0
        };
        let inner: Vec<usize> = nb[v].iter().copied().filter(|&j| interior[j]).collect();
        let h_sigma = if inner.is_empty() {
            0.0
        } else {
            inner.iter().map(|&j| h_vec[j].dot(&normals[j])).sum::<f64>() / inner.len() as f64
        };
        let foot = domain.project_to_boundary(&pair.vertices[v]).unwrap_or(pair.vertices[v]);
        let h_wall = domain.boundary_mean_curvature_scalar(&foot);
        let q = h_wall / sin_t + cos_t / sin_t * h_sigma - kappa;
        out.push(ContactCoefficient { vertex: v, h_wall, h_sigma, kappa, q });
    }
    Ok(out)
}

pub fn assemble_stability(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    options: &StabilityOptions,
) -> Result<StabilityForm, AnalysisError> {
    let n = pair.num_vertices();
    let in_sigma = pair.sigma_vertex_set();
    let mut index = vec![None; n];
    let mut dofs = Vec::new();
    for i in 0..n {
        if in_sigma[i] && !pair.pinned[i] {
            index[i] = Some(dofs.len());
            dofs.push(i);
        }
    }
    if dofs.is_empty() {
        return Err(AnalysisError::EmptyInput("free sigma vertices"));
    }
    let fields = curvature_fields(pair)?;
    let m = dofs.len();
    let mut stiffness = DMatrix::zeros(m, m);
    let mut mass = DMatrix::zeros(m, m);
    let mut curvature_mass = DMatrix::zeros(m, m);
    let v = &pair.vertices;
    for t in &pair.sigma_triangles {
        let (g, area) = hat_gradients([&v[t[0]], &v[t[1]], &v[t[2]]]);
        let a2 = (fields.a2[t[0]] + fields.a2[t[1]] + fields.a2[t[2]]) / 3.0;
        for a in 0..3 {
            let Some(i) = index[t[a]] else { continue };
            for b in 0..3 {
                let Some(j) = index[t[b]] else { continue };
                let mij = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                stiffness[(i, j)] += area * g[a].dot(&g[b]);
                mass[(i, j)] += mij;
                curvature_mass[(i, j)] += a2 * mij;
            }
        }
    }
    let mut boundary = DMatrix::zeros(m, m);
    let q_field = if pair.contact_polyline.is_empty() || pair.gamma_triangles.is_empty() {
        Vec::new()
    } else {
        contact_coefficients(pair, domain, &fields.h, &fields.interior)?
    };
    if !options.force_q_zero {
        let q_of = |vtx: usize| q_field.iter().find(|c| c.vertex == vtx).map_or(0.0, |c| c.q);
        for (p, r) in pair.contact_edges() {
            let len = (v[r] - v[p]).norm();
            let q = 0.5 * (q_of(p) + q_of(r));
            let ends = [index[p], index[r]];
            for a in 0..2 {
                let Some(i) = ends[a] else { continue };
                for b in 0..2 {
                    let Some(j) = ends[b] else { continue };
                    boundary[(i, j)] += q * len / 6.0 * if a == b { 2.0 } else { 1.0 };
                }
            }
        }
    }
    Ok(StabilityForm { dofs, index, stiffness, mass, curvature_mass, boundary, q_field, a2_field: fields.a2 })
}

/// Generalized eigenpairs of `Q u = λ M u`, ascending, via a Cholesky reduction.
pub fn generalized_eigen(q: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), AnalysisError> {
    let chol = m.clone().cholesky().ok_or(AnalysisError::EigenFailure("mass matrix is not positive definite"))?;
    let l = chol.l();
    let linv_q = l.solve_lower_triangular(q).ok_or(AnalysisError::EigenFailure("singular mass factor"))?;
    let c = l.solve_lower_triangular(&linv_q.transpose()).ok_or(AnalysisError::EigenFailure("singular mass factor"))?;
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::try_new(c, 1e-14, 10_000).ok_or(AnalysisError::EigenFailure("no convergence"))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let y = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, k| eig.eigenvectors[(i, order[k])]);
    let u = l.transpose().solve_upper_triangular(&y).ok_or(AnalysisError::EigenFailure("singular mass factor"))?;
    Ok((values, u))
}

pub fn stability_spectrum(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    options: &StabilityOptions,
) -> Result<StabilityReport, AnalysisError> {
    let form = assemble_stability(pair, domain, options)?;
    let q = form.matrix();
    let norm = q.abs().max().max(f64::MIN_POSITIVE);
    let max_asymmetry = (&q - q.transpose()).abs().max() / norm;
    let (values, vectors) = generalized_eigen(&q, &form.mass)?;
    let k = options.num_eigs.min(values.len());
    let eigenvectors = (0..k)
        .map(|c| {
            let mut f = vec![0.0; pair.num_vertices()];
            for (d, &vtx) in form.dofs.iter().enumerate() {
                f[vtx] = vectors[(d, c)];
            }
            f
        })
        .collect();
    let num_near_zero = values.iter().filter(|l| l.abs() <= options.tol_eig).count();
    Ok(StabilityReport {
        eigenvalues: values[..k].to_vec(),
        eigenvectors,
        q_field: form.q_field,
        a2_field: form.a2_field,
        num_near_zero,
        tol_eig: options.tol_eig,
        max_asymmetry,
    })
}

/// `(−∫|A|² − ∮q) / Area(Σ)` by direct quadrature, independent of the matrices.
pub fn constant_rayleigh_quotient(pair: &SurfacePair, form: &StabilityForm) -> f64 {
    let v = &pair.vertices;
    let mut area = 0.0;
    let mut curv = 0.0;
    for t in &pair.sigma_triangles {
        let a = triangle_area(&v[t[0]], &v[t[1]], &v[t[2]]);
        area += a;
        curv += a * (form.a2_field[t[0]] + form.a2_field[t[1]] + form.a2_field[t[2]]) / 3.0;
    }
    let q_of = |vtx: usize| form.q_field.iter().find(|c| c.vertex == vtx).map_or(0.0, |c| c.q);
    let line: f64 = pair.contact_edges().iter().map(|&(p, r)| (v[r] - v[p]).norm() * 0.5 * (q_of(p) + q_of(r))).sum();
    (-curv - line) / area
}
