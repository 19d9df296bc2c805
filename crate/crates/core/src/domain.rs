//! Analytic convex containers.
//!
//! Every container is described by closed-form data: a ball, an axis-aligned
//! ellipsoid, a uniformly convex quartic level set, or a half-space (the flat
//! wall used for local models). Distances, projections and curvature are all
//! evaluated from the defining function, never from a mesh.

use crate::geom::{KahanSum, Vec3};
use nalgebra::{Matrix3, Matrix4, Vector4};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("point is not on the boundary (signed distance {distance:e})")]
    NotOnBoundary { distance: f64 },
    #[error("boundary projection did not converge after {iterations} iterations")]
    ProjectionFailed { iterations: usize },
    #[error("invalid domain parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Ball { radius: f64 },
    /// Axis-aligned ellipsoid with semi-axes `radii`.
    Ellipsoid { radii: [f64; 3] },
    /// Zero set of `Σ q_i + s Σ q_i² - (1 + s)` with `q_i = (y_i / r_i)²`.
    LevelSet { radii: [f64; 3], quartic: f64 },
    /// `{ x : (x - center) · normal <= 0 }`; `normal` is the outward unit normal.
    HalfSpace { normal: Vec3, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    pub kind: DomainKind,
    pub center: Vec3,
}

const MAX_PROJECTION_ITERS: usize = 60;

impl ConvexDomain {
    pub fn ball(center: Vec3, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Self { kind: DomainKind::Ball { radius }, center }
    }

    pub fn unit_ball() -> Self {
        Self::ball(Vec3::zeros(), 1.0)
    }

    pub fn ellipsoid(center: Vec3, radii: [f64; 3]) -> Self {
        assert!(radii.iter().all(|r| *r > 0.0), "semi-axes must be positive");
        Self { kind: DomainKind::Ellipsoid { radii }, center }
    }

    pub fn level_set(center: Vec3, radii: [f64; 3], quartic: f64) -> Self {
        assert!(radii.iter().all(|r| *r > 0.0) && quartic >= 0.0);
        Self { kind: DomainKind::LevelSet { radii, quartic }, center }
    }

    pub fn half_space(point: Vec3, outward_normal: Vec3) -> Self {
        Self {
            kind: DomainKind::HalfSpace { normal: outward_normal.normalize(), scale: 1.0 },
            center: point,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DomainKind::Ball { .. } => "ball",
            DomainKind::Ellipsoid { .. } => "ellipsoid",
            DomainKind::LevelSet { .. } => "level-set",
            DomainKind::HalfSpace { .. } => "half-space",
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => *radius,
            DomainKind::Ellipsoid { radii } | DomainKind::LevelSet { radii, .. } => {
                radii.iter().cloned().fold(0.0, f64::max)
            }
            DomainKind::HalfSpace { scale, .. } => *scale,
        }
    }

    /// Tolerance of every "lies on ∂M" predicate.
    pub fn tol_boundary(&self) -> f64 {
        1e-9 * self.bounding_radius()
    }

    /// Same domain after `x -> center + λ (x - center) + shift` applied to the body.
    pub fn transformed(&self, scale: f64, shift: Vec3) -> Self {
        let center = self.center * scale + shift;
        let kind = match &self.kind {
            DomainKind::Ball { radius } => DomainKind::Ball { radius: radius * scale },
            DomainKind::Ellipsoid { radii } => {
                DomainKind::Ellipsoid { radii: radii.map(|r| r * scale) }
            }
            DomainKind::LevelSet { radii, quartic } => {
                DomainKind::LevelSet { radii: radii.map(|r| r * scale), quartic: *quartic }
            }
            DomainKind::HalfSpace { normal, scale: s } => {
                DomainKind::HalfSpace { normal: *normal, scale: s * scale }
            }
        };
        Self { kind, center }
    }

    /// Defining function with value, gradient and Hessian (for the implicit kinds).
    fn level(&self, x: &Vec3) -> (f64, Vec3, Matrix3<f64>) {
        let y = x - self.center;
        match &self.kind {
            DomainKind::Ball { radius } => {
                let r2 = radius * radius;
                (y.norm_squared() / r2 - 1.0, 2.0 * y / r2, Matrix3::identity() * (2.0 / r2))
            }
            DomainKind::Ellipsoid { radii } => {
                let mut f = -1.0;
                let mut g = Vec3::zeros();
                let mut h = Matrix3::zeros();
                for i in 0..3 {
                    let r2 = radii[i] * radii[i];
                    f += y[i] * y[i] / r2;
                    g[i] = 2.0 * y[i] / r2;
                    h[(i, i)] = 2.0 / r2;
                }
                (f, g, h)
            }
            DomainKind::LevelSet { radii, quartic } => {
                let s = *quartic;
                let mut f = -(1.0 + s);
                let mut g = Vec3::zeros();
                let mut h = Matrix3::zeros();
                for i in 0..3 {
                    let r2 = radii[i] * radii[i];
                    let q = y[i] * y[i] / r2;
                    f += q + s * q * q;
                    g[i] = 2.0 * y[i] / r2 + s * 4.0 * y[i] * y[i] * y[i] / (r2 * r2);
                    h[(i, i)] = 2.0 / r2 + s * 12.0 * y[i] * y[i] / (r2 * r2);
                }
                (f, g, h)
            }
            DomainKind::HalfSpace { normal, .. } => (y.dot(normal), *normal, Matrix3::zeros()),
        }
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.level(x).0 <= 0.0
    }

    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => (x - self.center).norm() - radius,
            DomainKind::HalfSpace { normal, .. } => (x - self.center).dot(normal),
            _ => {
                let inside = self.level(x).0 <= 0.0;
                let p = match self.project_to_boundary(x) {
                    Ok(p) => p,
                    Err(_) => self.radial_boundary_point(x),
                };
                let d = (x - p).norm();
                if inside {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Boundary point on the ray from the center through `x` (`+e1` for the center itself).
    fn radial_boundary_point(&self, x: &Vec3) -> Vec3 {
        let mut dir = x - self.center;
        if dir.norm() < 1e-300 {
            dir = Vec3::x();
        }
        let dir = dir.normalize();
        match &self.kind {
            DomainKind::Ball { radius } => self.center + *radius * dir,
            DomainKind::HalfSpace { normal, .. } => {
                let t = dir.dot(normal);
                if t.abs() < 1e-300 {
                    *x
                } else {
                    x - (x - self.center).dot(normal) * normal
                }
            }
            _ => {
                // Bracket then bisect the level function along the ray.
                let mut hi = self.bounding_radius();
                while self.level(&(self.center + hi * dir)).0 < 0.0 {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.level(&(self.center + mid * dir)).0 < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-16 * hi {
                        break;
                    }
                }
                self.center + 0.5 * (lo + hi) * dir
            }
        }
    }

    /// Closest point of ∂M to `x`.
    pub fn project_to_boundary(&self, x: &Vec3) -> Result<Vec3, DomainError> {
        match &self.kind {
            DomainKind::Ball { .. } | DomainKind::HalfSpace { .. } => Ok(self.radial_boundary_point(x)),
            _ => {
                if (x - self.center).norm() < 1e-300 {
                    return Ok(self.radial_boundary_point(x));
                }
                self.newton_projection(x, self.radial_boundary_point(x)).or_else(|err| {
                    // Deep interior points can stall Newton from the radial start; retry
                    // from the nearest boundary samples and keep the closest converged foot.
                    let mut starts = self.sample_boundary(512);
                    starts.sort_by(|a, b| (a - x).norm().total_cmp(&(b - x).norm()));
                    starts
                        .into_iter()
                        .take(8)
                        .filter_map(|s| self.newton_projection(x, s).ok())
                        .min_by(|a, b| (a - x).norm().total_cmp(&(b - x).norm()))
                        .ok_or(err)
                })
            }
        }
    }

    /// Newton iteration on the Lagrange system `p - x + λ∇f(p) = 0`, `f(p) = 0`,
    /// started from a boundary point and safeguarded by step halving.
    fn newton_projection(&self, x: &Vec3, start: Vec3) -> Result<Vec3, DomainError> {
        let mut p = start;
        let (_, g0, _) = self.level(&p);
        let mut lambda = (x - p).dot(&g0) / g0.norm_squared();
        let residual = |p: &Vec3, lambda: f64| -> (Vector4<f64>, f64) {
            let (f, g, _) = self.level(p);
            let r = p - x + lambda * g;
            let v = Vector4::new(r.x, r.y, r.z, f);
            let scale = self.bounding_radius();
            (v, (r.norm() / scale).max(f.abs()))
        };
        let (mut res, mut err) = residual(&p, lambda);
        for _ in 0..MAX_PROJECTION_ITERS {
            if err < 1e-15 {
                return Ok(p);
            }
            let (_, g, h) = self.level(&p);
            let mut jac = Matrix4::zeros();
            let a = Matrix3::identity() + lambda * h;
            for i in 0..3 {
                for j in 0..3 {
                    jac[(i, j)] = a[(i, j)];
                }
                jac[(i, 3)] = g[i];
                jac[(3, i)] = g[i];
            }
            let Some(step) = jac.lu().solve(&(-res)) else {
                break;
            };
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-6 {
                let np = p + t * Vec3::new(step[0], step[1], step[2]);
                let nl = lambda + t * step[3];
                let (nres, nerr) = residual(&np, nl);
                if nerr < err || nerr < 1e-15 {
                    p = np;
                    lambda = nl;
                    res = nres;
                    err = nerr;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if err < 1e-12 {
            Ok(p)
        } else {
            Err(DomainError::ProjectionFailed { iterations: MAX_PROJECTION_ITERS })
        }
    }

    fn check_on_boundary(&self, x: &Vec3) -> Result<(), DomainError> {
        let d = self.signed_distance(x);
        if d.abs() > self.tol_boundary() {
            Err(DomainError::NotOnBoundary { distance: d })
        } else {
            Ok(())
        }
    }

    /// Normalized gradient of the defining function, without the on-boundary check.
    pub fn normal_at(&self, x: &Vec3) -> Vec3 {
        match &self.kind {
            DomainKind::Ball { .. } => (x - self.center).normalize(),
            DomainKind::HalfSpace { normal, .. } => *normal,
            _ => self.level(x).1.normalize(),
        }
    }

    pub fn outward_normal(&self, x: &Vec3) -> Result<Vec3, DomainError> {
        self.check_on_boundary(x)?;
        Ok(self.normal_at(x))
    }

    /// Principal curvatures `(k1 <= k2)` at a boundary point (positive for convex).
    pub fn principal_curvatures(&self, x: &Vec3) -> (f64, f64) {
        match &self.kind {
            DomainKind::Ball { radius } => (1.0 / radius, 1.0 / radius),
            DomainKind::HalfSpace { .. } => (0.0, 0.0),
            _ => {
                let (_, g, h) = self.level(x);
                let gn = g.norm();
                let n = g / gn;
                let (t1, t2) = crate::geom::frame_from_axis(&n);
                let s11 = t1.dot(&(h * t1)) / gn;
                let s12 = t1.dot(&(h * t2)) / gn;
                let s22 = t2.dot(&(h * t2)) / gn;
                let mean = 0.5 * (s11 + s22);
                let dev = (0.25 * (s11 - s22).powi(2) + s12 * s12).sqrt();
                (mean - dev, mean + dev)
            }
        }
    }

    /// `H̃ = -N div_{∂M} N`, with `div_{∂M} N` the sum of the principal curvatures.
    pub fn boundary_mean_curvature(&self, x: &Vec3) -> Result<Vec3, DomainError> {
        let n = self.outward_normal(x)?;
        let (k1, k2) = self.principal_curvatures(x);
        Ok(-(k1 + k2) * n)
    }

    /// Sum of principal curvatures at a boundary point.
    pub fn boundary_mean_curvature_scalar(&self, x: &Vec3) -> f64 {
        let (k1, k2) = self.principal_curvatures(x);
        k1 + k2
    }

    pub fn min_curvature_radius(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => *radius,
            DomainKind::Ellipsoid { radii } => {
                let min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = radii.iter().cloned().fold(0.0, f64::max);
                min * min / max
            }
            DomainKind::LevelSet { .. } => {
                let kmax = fibonacci_directions(4000)
                    .iter()
                    .map(|u| self.principal_curvatures(&self.radial_boundary_point(&(self.center + u))).1)
                    .fold(0.0, f64::max);
                1.0 / kmax
            }
            DomainKind::HalfSpace { .. } => f64::INFINITY,
        }
    }

    /// Largest principal curvature of ∂M.
    pub fn max_principal_curvature(&self) -> f64 {
        1.0 / self.min_curvature_radius()
    }

    /// Area of ∂M (infinite for a half-space).
    pub fn boundary_area(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => 4.0 * PI * radius * radius,
            DomainKind::HalfSpace { .. } => f64::INFINITY,
            _ => self.radial_quadrature(|s, cos_angle| s * s / cos_angle),
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            DomainKind::Ball { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            DomainKind::HalfSpace { .. } => f64::INFINITY,
            _ => self.radial_quadrature(|s, _| s * s * s / 3.0),
        }
    }

    /// `∫_{S²} F(s(u), u·N) dΩ` for the star-shaped boundary radius function `s(u)`.
    fn radial_quadrature(&self, integrand: impl Fn(f64, f64) -> f64) -> f64 {
        let (nodes, weights) = gauss_legendre(64);
        let nphi = 128;
        let mut sum = KahanSum::new();
        for (z, w) in nodes.iter().zip(weights.iter()) {
            let rho = (1.0 - z * z).sqrt();
            for k in 0..nphi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                let u = Vec3::new(rho * phi.cos(), rho * phi.sin(), *z);
                let p = self.radial_boundary_point(&(self.center + u));
                let s = (p - self.center).norm();
                let n = self.normal_at(&p);
                sum.add(w * (2.0 * PI / nphi as f64) * integrand(s, u.dot(&n)));
            }
        }
        sum.value()
    }

    /// Deterministic sample of boundary points.
    pub fn sample_boundary(&self, count: usize) -> Vec<Vec3> {
        match &self.kind {
            DomainKind::HalfSpace { normal, scale } => {
                let (e1, e2) = crate::geom::frame_from_axis(normal);
                fibonacci_directions(count)
                    .into_iter()
                    .map(|u| self.center + *scale * (u.x * e1 + u.y * e2))
                    .collect()
            }
            _ => fibonacci_directions(count)
                .into_iter()
                .map(|u| self.radial_boundary_point(&(self.center + u)))
                .collect(),
        }
    }
}

/// Nearly uniform unit vectors on the sphere (golden-angle spiral).
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<ConvexDomain> {
        vec![
            ConvexDomain::unit_ball(),
            ConvexDomain::ball(Vec3::new(0.3, -0.2, 0.1), 2.0),
            ConvexDomain::ellipsoid(Vec3::zeros(), [2.0, 1.0, 1.0]),
            ConvexDomain::ellipsoid(Vec3::new(0.1, 0.0, -0.4), [1.5, 1.0, 0.7]),
            ConvexDomain::level_set(Vec3::zeros(), [1.2, 1.0, 0.8], 0.5),
        ]
    }

    #[test]
    fn signed_distance_examples() {
        let b = ConvexDomain::unit_ball();
        assert_eq!(b.signed_distance(&Vec3::zeros()), -1.0);
        assert_eq!(b.signed_distance(&Vec3::new(1.0, 0.0, 0.0)), 0.0);
        let b2 = ConvexDomain::ball(Vec3::zeros(), 2.0);
        assert_eq!(b2.signed_distance(&Vec3::new(3.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn outward_normal_examples() {
        let b = ConvexDomain::unit_ball();
        let n = b.outward_normal(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((n - Vec3::z()).norm() < 1e-15);
        let e = ConvexDomain::ellipsoid(Vec3::zeros(), [2.0, 1.0, 1.0]);
        let n = e.outward_normal(&Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((n - Vec3::x()).norm() < 1e-15);
        assert!(matches!(
            b.outward_normal(&Vec3::zeros()),
            Err(DomainError::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let b = ConvexDomain::unit_ball();
        let p = b.project_to_boundary(&Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert!((p - Vec3::z()).norm() < 1e-15);
        let p = b.project_to_boundary(&Vec3::new(0.3, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::x()).norm() < 1e-15);
        // degenerate center of a level set: deterministic +e1 choice
        let l = ConvexDomain::level_set(Vec3::zeros(), [1.2, 1.0, 0.8], 0.5);
        let p = l.project_to_boundary(&Vec3::zeros()).unwrap();
        assert!(p.y == 0.0 && p.z == 0.0 && p.x > 0.0);
        assert!(l.signed_distance(&p).abs() < 1e-12);
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(ConvexDomain::ball(Vec3::zeros(), 2.0).min_curvature_radius(), 2.0);
        assert_eq!(ConvexDomain::unit_ball().min_curvature_radius(), 1.0);
        let e = ConvexDomain::ellipsoid(Vec3::zeros(), [2.0, 1.0, 1.0]);
        assert!((e.min_curvature_radius() - 0.5).abs() < 1e-15);
        // the analytic ellipsoid value agrees with curvature sampling
        let sampled = e
            .sample_boundary(4000)
            .iter()
            .map(|p| e.principal_curvatures(p).1)
            .fold(0.0, f64::max);
        assert!((1.0 / sampled - 0.5).abs() < 1e-3);

        let b = ConvexDomain::unit_ball();
        let h = b.boundary_mean_curvature(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((h - Vec3::new(-2.0, 0.0, 0.0)).norm() < 1e-15);
        let b2 = ConvexDomain::ball(Vec3::zeros(), 2.0);
        let h = b2.boundary_mean_curvature(&Vec3::new(0.0, 2.0, 0.0)).unwrap();
        assert!((h - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        let big = ConvexDomain::ball(Vec3::zeros(), 1e6);
        let h = big.boundary_mean_curvature(&Vec3::new(0.0, 0.0, 1e6)).unwrap();
        assert!(h.norm() <= 3e-6);
        // implicit-route curvature on an ellipsoid that is a sphere
        let s = ConvexDomain::ellipsoid(Vec3::zeros(), [2.0, 2.0, 2.0]);
        let (k1, k2) = s.principal_curvatures(&Vec3::new(0.0, 2.0, 0.0));
        assert!((k1 - 0.5).abs() < 1e-14 && (k2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn normals_match_distance_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dom in all_kinds() {
            for _ in 0..100 {
                let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let p = dom.project_to_boundary(&(dom.center + u)).unwrap();
                let n = dom.outward_normal(&p).unwrap();
                assert!((n.norm() - 1.0).abs() <= 1e-12);
                let step = 1e-5;
                let mut g = Vec3::zeros();
                for k in 0..3 {
                    let mut e = Vec3::zeros();
                    e[k] = step;
                    g[k] = (dom.signed_distance(&(p + e)) - dom.signed_distance(&(p - e))) / (2.0 * step);
                }
                let g = g.normalize();
                assert!((g - n).norm() <= 1e-6, "{} {:?} vs {:?}", dom.kind_name(), g, n);
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dom in all_kinds() {
            for _ in 0..100 {
                let x = dom.center
                    + Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
                        * dom.bounding_radius();
                let p = dom.project_to_boundary(&x).unwrap();
                assert!(dom.signed_distance(&p).abs() <= 1e-12);
                let q = dom.project_to_boundary(&p).unwrap();
                assert!((p - q).norm() <= 1e-12);
                let inside = dom.contains(&x);
                assert_eq!(dom.signed_distance(&x) < 0.0, inside);
            }
        }
    }

    #[test]
    fn convexity_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dom in all_kinds() {
            let pts = dom.sample_boundary(500);
            for _ in 0..1000 {
                let p = pts[rng.gen_range(0..pts.len())];
                let q = pts[rng.gen_range(0..pts.len())];
                assert!(dom.signed_distance(&(0.5 * (p + q))) <= 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_area_and_volume() {
        let s = ConvexDomain::ellipsoid(Vec3::zeros(), [1.0, 1.0, 1.0]);
        assert!((s.boundary_area() - 4.0 * PI).abs() < 1e-10);
        assert!((s.volume() - 4.0 * PI / 3.0).abs() < 1e-10);
        let e = ConvexDomain::ellipsoid(Vec3::zeros(), [2.0, 1.0, 1.0]);
        assert!((e.volume() - 8.0 * PI / 3.0).abs() < 1e-8);
        // prolate spheroid area: 2πb² (1 + a/(b e) asin e)
        let ecc: f64 = (1.0f64 - 0.25).sqrt();
        let exact = 2.0 * PI * (1.0 + 2.0 / ecc * ecc.asin());
        assert!((e.boundary_area() - exact).abs() < 1e-6);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }
}
