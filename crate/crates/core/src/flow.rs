//! Constrained descent of `F_a`: global pull-tight, local relaxation with a frozen
//! exterior, and frozen blends of two pairs.

use crate::domain::ConvexDomain;
use crate::energy::{capillarity_energy, constrain, raw_gradient};
use crate::geom::{compensated_sum, smoothstep, triangle_area, Vec3};
use crate::surface::{vertex_neighbors, SurfaceError, SurfacePair, VertexRole};
use std::fmt::Write as _;
use thiserror::Error;

/// Smallest accepted step before the line search gives up.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("line search stalled at F_a = {energy} (step {step:e})")]
    LineSearchStalled { step: f64, energy: f64 },
    #[error("invalid flow options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub max_steps: usize,
    /// Stop once the constrained gradient sup norm is at most this.
    pub grad_tol: f64,
    /// Initial step in units of `h²` per unit mean curvature.
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    /// Energy budget `ε`: no iterate may exceed `F_a(0) + ε/8`.
    pub barrier_epsilon: Option<f64>,
    /// Restricts Σ vertices to move along this direction (wall vertices use its
    /// tangential part).
    pub direction: Option<Vec3>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            grad_tol: 1e-9,
            step_init: 0.2,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            barrier_epsilon: None,
            direction: None,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidOptions(m.to_string()));
        if !(self.grad_tol > 0.0 && self.step_init > 0.0) {
            return bad("grad_tol and step_init must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if matches!(self.barrier_epsilon, Some(e) if !(e >= 0.0)) {
            return bad("barrier_epsilon must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxSteps,
    BarrierHit,
    /// The predicted decrease of a nominal step is below the floating-point
    /// resolution of energy differences: no representable descent remains.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    /// `F_a` of every iterate, starting with the input.
    pub energies: Vec<f64>,
    /// Accepted step of each iteration.
    pub step_sizes: Vec<f64>,
    /// Constrained gradient sup norm of every iterate.
    pub grad_norms: Vec<f64>,
    pub pair: SurfacePair,
    pub termination: Termination,
}

impl FlowTrace {
    pub fn steps(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,F_a,grad_norm,step_size\n");
        for (k, (f, g)) in self.energies.iter().zip(&self.grad_norms).enumerate() {
            let step = if k == 0 { 0.0 } else { self.step_sizes[k - 1] };
            let _ = writeln!(s, "{k},{:.11e},{:.11e},{:.11e}", f, g, step);
        }
        s
    }
}

/// Size of the roundoff in an energy difference caused by rounding the vertex
/// positions: machine epsilon times the coordinate magnitude times the total edge length.
fn energy_resolution(pair: &SurfacePair) -> f64 {
    let extent = pair.vertices.iter().fold(0.0f64, |m, v| m.max(v.amax()));
    let v = &pair.vertices;
    let length: f64 = pair
        .sigma_triangles
        .iter()
        .chain(&pair.gamma_triangles)
        .map(|t| (v[t[0]] - v[t[1]]).norm() + (v[t[1]] - v[t[2]]).norm() + (v[t[2]] - v[t[0]]).norm())
        .sum();
    f64::EPSILON * extent.max(1e-300) * length
}

/// Barycentric area of every vertex over both sheets.
fn vertex_areas(pair: &SurfacePair) -> Vec<f64> {
    let mut area = vec![0.0; pair.num_vertices()];
    let v = &pair.vertices;
    for t in pair.sigma_triangles.iter().chain(&pair.gamma_triangles) {
        let a = triangle_area(&v[t[0]], &v[t[1]], &v[t[2]]) / 3.0;
        for &k in t {
            area[k] += a;
        }
    }
    area
}

fn restrict_direction(pair: &SurfacePair, domain: &ConvexDomain, axis: &Vec3, field: &mut [Vec3]) {
    for (i, g) in field.iter_mut().enumerate() {
        let mut e = *axis;
        if pair.roles[i].on_wall() {
            let n = domain.normal_at(&pair.vertices[i]);
            e -= e.dot(&n) * n;
        }
        let len2 = e.norm_squared();
        *g = if len2 > 1e-24 { e * (g.dot(&e) / len2) } else { Vec3::zeros() };
    }
}

/// Removes the component along the contact polyline at contact vertices. Sliding
/// along the contact line only reparametrizes it, and the discrete energy rewards
/// collapsing contact edges (an inscribed polygon loses area when it bunches up).
fn remove_contact_slip(pair: &SurfacePair, field: &mut [Vec3]) {
    let c = &pair.contact_polyline;
    let n = c.len();
    for k in 0..n {
        let prev = if k > 0 { Some(c[k - 1]) } else if pair.contact_closed { Some(c[n - 1]) } else { None };
        let next = if k + 1 < n { Some(c[k + 1]) } else if pair.contact_closed { Some(c[0]) } else { None };
        let (Some(p), Some(q)) = (prev, next) else { continue };
        let t = pair.vertices[q] - pair.vertices[p];
        let len = t.norm();
        if len > 0.0 {
            let t = t / len;
            let v = &mut field[c[k]];
            *v -= v.dot(&t) * t;
        }
    }
}

/// Admissible gradient of `F_a` and the part of it the flow descends along.
fn constrained_gradient(pair: &SurfacePair, domain: &ConvexDomain, options: &FlowOptions) -> (Vec<Vec3>, Vec<Vec3>) {
    let mut full = raw_gradient(pair);
    constrain(pair, domain, &mut full);
    let mut g = full.clone();
    remove_contact_slip(pair, &mut g);
    // Interior vertices of Γ only parametrize a piece of ∂M; their discrete gradient
    // is a chordal artifact that bunches the mesh, so they do not descend.
    for (i, r) in pair.roles.iter().enumerate() {
        if *r == VertexRole::Gamma {
            g[i] = Vec3::zeros();
        }
    }
    if let Some(axis) = &options.direction {
        restrict_direction(pair, domain, &axis.normalize(), &mut g);
    }
    (full, g)
}

/// `F_a(new) − F_a(old)` for two pairs with the same triangles, accurate relative to
/// the change itself rather than to `F_a`.
pub fn energy_change(old: &SurfacePair, new: &SurfacePair) -> f64 {
    let m = old.multiplicity as f64;
    let tri_change = |t: &[usize; 3]| {
        let p = &old.vertices;
        let q = &new.vertices;
        let e1 = p[t[1]] - p[t[0]];
        let e2 = p[t[2]] - p[t[0]];
        let d0 = q[t[0]] - p[t[0]];
        let d1 = q[t[1]] - p[t[1]] - d0;
        let d2 = q[t[2]] - p[t[2]] - d0;
        let n = e1.cross(&e2);
        let dn = d1.cross(&e2) + e1.cross(&d2) + d1.cross(&d2);
        let denom = (n + dn).norm() + n.norm();
        if denom == 0.0 {
            0.0
        } else {
            (2.0 * n.dot(&dn) + dn.norm_squared()) / (2.0 * denom)
        }
    };
    let s = compensated_sum(old.sigma_triangles.iter().map(tri_change));
    let g = compensated_sum(old.gamma_triangles.iter().map(tri_change));
    m * (s + old.a * g)
}

/// Γ vertices next to the contact polyline move with half the mean velocity of
/// their contact neighbours, so the first Γ band follows a moving contact line.
fn follow_contact(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    neighbors: &[Vec<usize>],
    dir: &[Vec3],
    follow: &mut [Vec3],
) {
    for i in 0..pair.num_vertices() {
        if pair.roles[i] != VertexRole::Gamma || pair.pinned[i] {
            continue;
        }
        let (sum, count) = neighbors[i]
            .iter()
            .filter(|&&j| pair.roles[j] == VertexRole::Contact)
            .fold((Vec3::zeros(), 0usize), |(s, c), &j| (s + dir[j], c + 1));
        if count > 0 {
            let n = domain.normal_at(&pair.vertices[i]);
            let v = 0.5 * sum / count as f64;
            follow[i] = v - v.dot(&n) * n;
        }
    }
}

/// Moves every non-pinned vertex by `step * dir` and puts wall vertices back on ∂M.
fn advance(pair: &SurfacePair, domain: &ConvexDomain, dir: &[Vec3], step: f64) -> SurfacePair {
    let mut out = pair.clone();
    for (i, v) in out.vertices.iter_mut().enumerate() {
        if pair.pinned[i] {
            continue;
        }
        let moved = *v + step * dir[i];
        *v = if pair.roles[i].on_wall() { domain.project_to_boundary(&moved).unwrap_or(moved) } else { moved };
    }
    out
}

/// Projected gradient descent of `F_a`, preconditioned by vertex areas, with
/// Armijo backtracking and reprojection of wall vertices after every step.
pub fn pull_tight(pair: &SurfacePair, domain: &ConvexDomain, options: &FlowOptions) -> Result<FlowTrace, FlowError> {
    options.validate()?;
    let h = pair.max_edge_length();
    let mut current = pair.clone();
    let f0 = capillarity_energy(&current).f_a;
    let ceiling = options.barrier_epsilon.map(|e| f0 + e / 8.0);
    let mut f = f0;
    let (mut full, mut grad) = constrained_gradient(&current, domain, options);
    let resolution = energy_resolution(&current);
    let sup = |g: &[Vec3]| g.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let mut trace = FlowTrace {
        energies: vec![f0],
        step_sizes: Vec::new(),
        grad_norms: vec![sup(&grad)],
        pair: pair.clone(),
        termination: Termination::MaxSteps,
    };
    let mut step = options.step_init;
    let gamma_neighbors = vertex_neighbors(current.num_vertices(), &current.gamma_triangles);
    for _ in 0..options.max_steps {
        if sup(&grad) <= options.grad_tol {
            trace.termination = Termination::Converged;
            break;
        }
        let area = vertex_areas(&current);
        let mut dir: Vec<Vec3> = grad
            .iter()
            .zip(&area)
            .map(|(g, a)| if *a > 0.0 { -g / *a } else { Vec3::zeros() })
            .collect();
        let mut follow = vec![Vec3::zeros(); dir.len()];
        follow_contact(&current, domain, &gamma_neighbors, &dir, &mut follow);
        // The followers sit on chordal artifacts of Γ; damp them so that the
        // combined direction keeps at least half of the first-order decrease.
        let descent = compensated_sum(full.iter().zip(&dir).map(|(g, d)| g.dot(d)));
        let drag = compensated_sum(full.iter().zip(&follow).map(|(g, d)| g.dot(d)));
        let scale = if drag > -0.5 * descent { (-0.5 * descent / drag).clamp(0.0, 1.0) } else { 1.0 };
        for (d, f) in dir.iter_mut().zip(&follow) {
            *d += scale * f;
        }
        let nominal = (descent + scale * drag) * options.step_init * h * h;
        let mut accepted = None;
        let mut first_trial = true;
        while step >= MIN_STEP {
            let trial = advance(&current, domain, &dir, step * h * h);
            let ft = f + energy_change(&current, &trial);
            if let Some(c) = ceiling {
                if first_trial && ft > c {
                    trace.termination = Termination::BarrierHit;
                    trace.pair = current;
                    return Ok(trace);
                }
            }
            first_trial = false;
            let predicted = compensated_sum(
                full.iter().enumerate().map(|(i, g)| g.dot(&(trial.vertices[i] - current.vertices[i]))),
            );
            let within = ceiling.is_none_or(|c| ft <= c);
            if ft < f && ft <= f + options.armijo_c * predicted && within {
                accepted = Some((trial, ft));
                break;
            }
            step *= options.backtrack_factor;
        }
        let Some((next, fnext)) = accepted else {
            trace.pair = current;
            if nominal.abs() <= 100.0 * resolution {
                trace.termination = Termination::Stagnated;
                return Ok(trace);
            }
            return Err(FlowError::LineSearchStalled { step, energy: f });
        };
        trace.step_sizes.push(step);
        current = next;
        f = fnext;
        (full, grad) = constrained_gradient(&current, domain, options);
        trace.energies.push(f);
        trace.grad_norms.push(sup(&grad));
        step = (step / options.backtrack_factor).min(1e3 * options.step_init);
    }
    if trace.termination == Termination::MaxSteps && sup(&grad) <= options.grad_tol {
        trace.termination = Termination::Converged;
    }
    trace.pair = current;
    Ok(trace)
}

/// Descent with every vertex outside the open ball `B(center, radius)` frozen.
pub fn local_relax(
    pair: &SurfacePair,
    domain: &ConvexDomain,
    center: &Vec3,
    radius: f64,
    options: &FlowOptions,
) -> Result<FlowTrace, FlowError> {
    let mut frozen = pair.clone();
    for (i, v) in pair.vertices.iter().enumerate() {
        if (v - center).norm() >= radius {
            frozen.pinned[i] = true;
        }
    }
    let mut trace = pull_tight(&frozen, domain, options)?;
    trace.pair.pinned = pair.pinned.clone();
    Ok(trace)
}

fn same_combinatorics(a: &SurfacePair, b: &SurfacePair) -> bool {
    a.num_vertices() == b.num_vertices()
        && a.roles == b.roles
        && a.sigma_triangles == b.sigma_triangles
        && a.gamma_triangles == b.gamma_triangles
        && a.contact_polyline == b.contact_polyline
        && a.contact_closed == b.contact_closed
}

/// Vertexwise blend `A + λ w (B − A)` with `w = 1` inside `B(center, radius − h)`,
/// a smoothstep across a band of width `h` and `0` outside the ball; blended wall
/// vertices are reprojected to ∂M.
pub fn freeze_blend(
    pair_a: &SurfacePair,
    pair_b: &SurfacePair,
    domain: &ConvexDomain,
    center: &Vec3,
    radius: f64,
    lambda: f64,
) -> Result<SurfacePair, FlowError> {
    if !same_combinatorics(pair_a, pair_b) {
        return Err(SurfaceError::IncompatibleMeshes.into());
    }
    let h = pair_a.max_edge_length();
    let mut out = pair_a.clone();
    for (i, v) in out.vertices.iter_mut().enumerate() {
        let r = (pair_a.vertices[i] - center).norm();
        let w = smoothstep((radius - r) / h);
        if w == 0.0 || lambda == 0.0 {
            continue;
        }
        let x = pair_a.vertices[i] + lambda * w * (pair_b.vertices[i] - pair_a.vertices[i]);
        *v = if pair_a.roles[i].on_wall() { domain.project_to_boundary(&x).unwrap_or(x) } else { x };
    }
    Ok(out)
}
