//! Finite differences for the graph free-boundary problem
//! `−div(∇g/√(1+|∇g|²)) = 0` on `{g > h}` with the capillary condition
//! `−∇g·∇h + 1 = a√(1+|∇g|²)√(1+|∇h|²)` on `{g = h}`.

use crate::record::Record;
use ndarray::Array2;
use std::collections::HashSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbError {
    #[error("invalid free-boundary problem: {0}")]
    InvalidProblem(String),
    #[error("no convergence after {max_iter} sweeps (interior residual {interior_residual}, contact residual {contact_residual})")]
    NotConverged { max_iter: usize, interior_residual: f64, contact_residual: f64 },
}

/// Square grid `[lo, hi]²` with `n` nodes per side; node `(i, j)` sits at
/// `(x₁, x₂) = (lo + i·Δ, lo + j·Δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbProblem {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub h_field: Array2<f64>,
    /// Only the rim values are used.
    pub dirichlet: Array2<f64>,
    pub a: f64,
    /// Slopes are clamped at this bound inside the scheme.
    pub lipschitz_bound: f64,
}

impl FbProblem {
    pub fn from_fns(
        n: usize,
        lo: f64,
        hi: f64,
        h: impl Fn(f64, f64) -> f64,
        dirichlet: impl Fn(f64, f64) -> f64,
        a: f64,
        lipschitz_bound: f64,
    ) -> Self {
        let d = (hi - lo) / (n.max(2) - 1) as f64;
        let at = |i: usize| lo + i as f64 * d;
        Self {
            n,
            lo,
            hi,
            h_field: Array2::from_shape_fn((n, n), |(i, j)| h(at(i), at(j))),
            dirichlet: Array2::from_shape_fn((n, n), |(i, j)| dirichlet(at(i), at(j))),
            a,
            lipschitz_bound,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn is_rim(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n
    }

    pub fn validate(&self) -> Result<(), FbError> {
        let bad = |m: String| Err(FbError::InvalidProblem(m));
        if self.n < 3 {
            return bad(format!("grid needs at least 3 nodes per side, got {}", self.n));
        }
        if !(self.hi > self.lo) {
            return bad("grid spacing must be positive".into());
        }
        if self.h_field.dim() != (self.n, self.n) || self.dirichlet.dim() != (self.n, self.n) {
            return bad("field shapes do not match the grid".into());
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return bad(format!("a = {} outside (0, 1)", self.a));
        }
        if !(self.lipschitz_bound > 0.0) {
            return bad("lipschitz bound must be positive".into());
        }
        for i in 0..self.n {
            for j in 0..self.n {
                if self.is_rim(i, j) && self.dirichlet[(i, j)] < self.h_field[(i, j)] {
                    return bad(format!("dirichlet below h at rim node ({i}, {j})"));
                }
            }
        }
        Ok(())
    }

    /// Same problem on every other node (`n` must be odd).
    fn coarsened(&self) -> Option<FbProblem> {
        if self.n.is_multiple_of(2) || self.n < 9 {
            return None;
        }
        let m = self.n.div_ceil(2);
        let pick = |f: &Array2<f64>| Array2::from_shape_fn((m, m), |(i, j)| f[(2 * i, 2 * j)]);
        Some(FbProblem { n: m, h_field: pick(&self.h_field), dirichlet: pick(&self.dirichlet), ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    RedBlack,
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbOptions {
    /// Target for the interior residual.
    pub tol: f64,
    /// Budget of relaxation sweeps over all free-boundary updates and grid levels.
    pub max_iter: usize,
    pub omega: f64,
    pub tol_contact: f64,
    pub order: SweepOrder,
    /// Start from the solution on the grid with every other node removed.
    pub cascade: bool,
    pub max_outer: usize,
}

impl Default for FbOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200_000,
            omega: 1.9,
            tol_contact: 1e-12,
            order: SweepOrder::RedBlack,
            cascade: true,
            max_outer: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FbSolution {
    pub g_field: Array2<f64>,
    pub contact_set: Array2<bool>,
    pub interior_residual: f64,
    pub contact_residual: f64,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub clamp_activations: usize,
    /// Whether the free-boundary updates stopped because a contact set repeated.
    pub cycled: bool,
}

impl FbSolution {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new();
        r.num("interior_residual", self.interior_residual);
        r.num("contact_residual", self.contact_residual);
        r.int("iterations", self.iterations as i64);
        r.int("outer_iterations", self.outer_iterations as i64);
        r.int("clamp_activations", self.clamp_activations as i64);
        r.int("contact_nodes", self.contact_set.iter().filter(|&&c| c).count() as i64);
        r.flag("cycled", self.cycled);
        r
    }
}

/// Row-per-line CSV of a grid field (row index `i`, column index `j`).
pub fn field_to_csv(field: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in field.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.11e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

const NB4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

struct Stencil<'a> {
    p: &'a FbProblem,
    d: f64,
    clamps: usize,
}

impl<'a> Stencil<'a> {
    fn new(p: &'a FbProblem) -> Self {
        Self { p, d: p.spacing(), clamps: 0 }
    }

    fn at(&self, g: &Array2<f64>, i: usize, j: usize, di: isize, dj: isize) -> f64 {
        g[((i as isize + di) as usize, (j as isize + dj) as usize)]
    }

    /// Tangential central difference at node `(i, j)` across direction `(di, dj)`,
    /// one-sided on the rim.
    fn tangential(&self, g: &Array2<f64>, i: usize, j: usize, di: isize, dj: isize) -> f64 {
        let (ti, tj) = (dj.abs(), di.abs());
        let n = self.p.n as isize;
        let (ii, jj) = (i as isize, j as isize);
        let fwd = (ii + ti < n && jj + tj < n).then(|| self.at(g, i, j, ti, tj));
        let bwd = (ii - ti >= 0 && jj - tj >= 0).then(|| self.at(g, i, j, -ti, -tj));
        let c = g[(i, j)];
        match (fwd, bwd) {
            (Some(f), Some(b)) => (f - b) / (2.0 * self.d),
            (Some(f), None) => (f - c) / self.d,
            (None, Some(b)) => (c - b) / self.d,
            (None, None) => 0.0,
        }
    }

    /// Conductance `1/√(1+|∇g|²)` on the face from `(i, j)` towards `(i+di, j+dj)`.
    fn conductance(&mut self, g: &Array2<f64>, i: usize, j: usize, di: isize, dj: isize) -> f64 {
        let normal = (self.at(g, i, j, di, dj) - g[(i, j)]) / self.d;
        let (k, l) = ((i as isize + di) as usize, (j as isize + dj) as usize);
        let tangential = 0.5 * (self.tangential(g, i, j, di, dj) + self.tangential(g, k, l, di, dj));
        let mut s2 = normal * normal + tangential * tangential;
        let cap = self.p.lipschitz_bound * self.p.lipschitz_bound;
        if s2 > cap {
            self.clamps += 1;
            s2 = cap;
        }
        1.0 / (1.0 + s2).sqrt()
    }

    /// Discrete `−div(∇g/√(1+|∇g|²))` at an interior node.
    fn operator(&mut self, g: &Array2<f64>, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for (di, dj) in NB4 {
            let c = self.conductance(g, i, j, di, dj);
            s += c * (self.at(g, i, j, di, dj) - g[(i, j)]);
        }
        -s / (self.d * self.d)
    }

    /// Gauss–Seidel target value at an interior node.
    fn balance(&mut self, g: &Array2<f64>, i: usize, j: usize) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (di, dj) in NB4 {
            let c = self.conductance(g, i, j, di, dj);
            num += c * self.at(g, i, j, di, dj);
            den += c;
        }
        num / den
    }
}

/// Upwind gradient of `g` at `(i, j)` taken towards the higher neighbours, with the
/// node value replaced by `center`.
fn upwind_gradient(g: &Array2<f64>, i: usize, j: usize, center: f64, d: f64) -> (f64, f64) {
    let up = |a: f64, b: f64| (a - center).max(b - center).max(0.0) / d;
    let gi = up(g[(i + 1, j)], g[(i - 1, j)]);
    let gj = up(g[(i, j + 1)], g[(i, j - 1)]);
    // Sign of each component follows the higher side.
    let si = if g[(i + 1, j)] >= g[(i - 1, j)] { 1.0 } else { -1.0 };
    let sj = if g[(i, j + 1)] >= g[(i, j - 1)] { 1.0 } else { -1.0 };
    (si * gi, sj * gj)
}

fn wall_gradient(h: &Array2<f64>, i: usize, j: usize, d: f64) -> (f64, f64) {
    ((h[(i + 1, j)] - h[(i - 1, j)]) / (2.0 * d), (h[(i, j + 1)] - h[(i, j - 1)]) / (2.0 * d))
}

/// `a√(1+|p|²)√(1+|∇h|²) + ∇h·p − 1`; positive when the graph leaves the wall too steeply.
pub fn contact_defect(p: (f64, f64), grad_h: (f64, f64), a: f64) -> f64 {
    let pp = p.0 * p.0 + p.1 * p.1;
    let hh = grad_h.0 * grad_h.0 + grad_h.1 * grad_h.1;
    a * (1.0 + pp).sqrt() * (1.0 + hh).sqrt() + grad_h.0 * p.0 + grad_h.1 * p.1 - 1.0
}

fn interior_nodes(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n - 1).flat_map(move |i| (1..n - 1).map(move |j| (i, j)))
}

fn neighbours4(i: usize, j: usize) -> [(usize, usize); 4] {
    [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
}

/// Contact nodes (interior or rim) that touch a free interior node.
fn front(p: &FbProblem, contact: &Array2<bool>) -> Vec<(usize, usize)> {
    interior_nodes(p.n).filter(|&(i, j)| contact[(i, j)] && neighbours4(i, j).iter().any(|&q| !contact[q])).collect()
}

/// Nodes within one cell (8-neighbourhood) of the contact set.
fn kink_band(p: &FbProblem, contact: &Array2<bool>) -> Array2<bool> {
    let n = p.n as isize;
    Array2::from_shape_fn((p.n, p.n), |(i, j)| {
        (-1..=1).any(|di| {
            (-1..=1).any(|dj| {
                let (k, l) = (i as isize + di, j as isize + dj);
                k >= 0 && l >= 0 && k < n && l < n && contact[(k as usize, l as usize)]
            })
        })
    })
}

fn contact_mask(p: &FbProblem, g: &Array2<f64>, tol: f64) -> Array2<bool> {
    Array2::from_shape_fn((p.n, p.n), |(i, j)| (g[(i, j)] - p.h_field[(i, j)]).abs() <= tol)
}

fn residuals_of(p: &FbProblem, g: &Array2<f64>, contact: &Array2<bool>) -> (f64, f64, usize) {
    let mut st = Stencil::new(p);
    let band = kink_band(p, contact);
    let mut interior: f64 = 0.0;
    for (i, j) in interior_nodes(p.n) {
        if !band[(i, j)] {
            interior = interior.max(st.operator(g, i, j).abs());
        }
    }
    let mut contact_res: f64 = 0.0;
    for (i, j) in front(p, contact) {
        let pgrad = upwind_gradient(g, i, j, g[(i, j)], st.d);
        contact_res = contact_res.max(contact_defect(pgrad, wall_gradient(&p.h_field, i, j, st.d), p.a).abs());
    }
    (interior, contact_res, st.clamps)
}

/// Relaxation on the free nodes with the contact nodes held at `h`; returns sweeps used
/// and the final maximal free-node operator value.
fn relax(p: &FbProblem, g: &mut Array2<f64>, fixed: &Array2<bool>, o: &FbOptions, budget: usize) -> (usize, f64, usize) {
    let mut st = Stencil::new(p);
    let nodes: Vec<(usize, usize)> = match o.order {
        SweepOrder::Lexicographic => interior_nodes(p.n).collect(),
        SweepOrder::RedBlack => {
            let mut v: Vec<_> = interior_nodes(p.n).filter(|(i, j)| (i + j) % 2 == 0).collect();
            v.extend(interior_nodes(p.n).filter(|(i, j)| (i + j) % 2 == 1));
            v
        }
    };
    let free: Vec<(usize, usize)> = nodes.into_iter().filter(|&q| !fixed[q]).collect();
    let mut sweeps = 0;
    loop {
        let mut res: f64 = 0.0;
        for &(i, j) in &free {
            let op = st.operator(g, i, j);
            // Nodes held by the obstacle only need the supersolution side.
            let active = g[(i, j)] - p.h_field[(i, j)] <= o.tol_contact;
            res = res.max(if active { (-op).max(0.0) } else { op.abs() });
        }
        if res <= o.tol || sweeps >= budget {
            return (sweeps, res, st.clamps);
        }
        for _ in 0..10 {
            for &(i, j) in &free {
                let target = st.balance(g, i, j);
                let v = g[(i, j)] + o.omega * (target - g[(i, j)]);
                g[(i, j)] = v.max(p.h_field[(i, j)]);
            }
            sweeps += 1;
        }
    }
}

fn initial_guess(p: &FbProblem) -> Array2<f64> {
    let mut g = p.h_field.clone();
    for i in 0..p.n {
        for j in 0..p.n {
            if p.is_rim(i, j) {
                g[(i, j)] = p.dirichlet[(i, j)];
            }
        }
    }
    g
}

/// Bilinear interpolation of a coarse solution; a fine node touches the wall when all
/// its coarse parents do.
fn prolongate(coarse_sol: &FbSolution, p: &FbProblem) -> Array2<f64> {
    let coarse = &coarse_sol.g_field;
    let cc = &coarse_sol.contact_set;
    let mut g = initial_guess(p);
    for i in 1..p.n - 1 {
        for j in 1..p.n - 1 {
            let (ci, cj) = (i / 2, j / 2);
            let (ri, rj) = (i % 2, j % 2);
            let v = match (ri, rj) {
                (0, 0) => coarse[(ci, cj)],
                (1, 0) => 0.5 * (coarse[(ci, cj)] + coarse[(ci + 1, cj)]),
                (0, 1) => 0.5 * (coarse[(ci, cj)] + coarse[(ci, cj + 1)]),
                _ => 0.25 * (coarse[(ci, cj)] + coarse[(ci + 1, cj)] + coarse[(ci, cj + 1)] + coarse[(ci + 1, cj + 1)]),
            };
            let (ci2, cj2) = (ci + ri, cj + rj);
            let touching = cc[(ci, cj)] && cc[(ci2, cj)] && cc[(ci, cj2)] && cc[(ci2, cj2)];
            g[(i, j)] = if touching { p.h_field[(i, j)] } else { v.max(p.h_field[(i, j)]) };
        }
    }
    g
}

pub fn solve_fb(problem: &FbProblem, tol: f64, max_iter: usize) -> Result<FbSolution, FbError> {
    solve_fb_with(problem, &FbOptions { tol, max_iter, ..FbOptions::default() })
}

/// Policy iteration on the contact set around projected SOR: the free nodes solve the
/// discrete minimal-surface equation above the obstacle, then front nodes whose upwind
/// slope exceeds the contact slope are released and free nodes next to the contact set
/// whose slope after touching down would stay below it are attached.
pub fn solve_fb_with(problem: &FbProblem, options: &FbOptions) -> Result<FbSolution, FbError> {
    problem.validate()?;
    let p = problem;
    let d = p.spacing();
    let mut used = 0;
    let mut g = match (options.cascade, p.coarsened()) {
        (true, Some(c)) => {
            let coarse = solve_fb_with(&c, options)?;
            used += coarse.iterations;
            prolongate(&coarse, p)
        }
        _ => initial_guess(p),
    };
    let mut contact = contact_mask(p, &g, options.tol_contact);
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut outer = 0;
    let mut cycled = false;
    let mut clamps = 0;
    loop {
        let budget = options.max_iter.saturating_sub(used);
        let (sweeps, res, c) = relax(p, &mut g, &contact, options, budget);
        used += sweeps;
        clamps += c;
        if res > options.tol {
            let (interior_residual, contact_residual, _) = residuals_of(p, &g, &contact);
            return Err(FbError::NotConverged { max_iter: options.max_iter, interior_residual, contact_residual });
        }
        // Nodes pushed onto the obstacle join the contact set.
        let touched = contact_mask(p, &g, options.tol_contact);
        contact.zip_mut_with(&touched, |c, &t| *c = *c || t);
        outer += 1;
        if outer > options.max_outer {
            break;
        }
        let release: Vec<(usize, usize)> = front(p, &contact)
            .into_iter()
            .filter(|&(i, j)| {
                let pg = upwind_gradient(&g, i, j, g[(i, j)], d);
                contact_defect(pg, wall_gradient(&p.h_field, i, j, d), p.a) > options.tol_contact.max(1e-12)
            })
            .collect();
        let attach: Vec<(usize, usize)> = if release.is_empty() {
            interior_nodes(p.n)
                .filter(|&(i, j)| {
                    !contact[(i, j)]
                        && neighbours4(i, j).iter().any(|&q| contact[q])
                        && contact_defect(
                            upwind_gradient(&g, i, j, p.h_field[(i, j)], d),
                            wall_gradient(&p.h_field, i, j, d),
                            p.a,
                        ) < -1e-12
                })
                .collect()
        } else {
            Vec::new()
        };
        if release.is_empty() && attach.is_empty() {
            break;
        }
        if !seen.insert(contact.iter().copied().collect()) {
            cycled = true;
            break;
        }
        for q in release {
            contact[q] = false;
            // Lift slightly so the node starts above the obstacle.
            g[q] = p.h_field[q] + d * 1e-3;
        }
        for q in attach {
            contact[q] = true;
            g[q] = p.h_field[q];
        }
    }
    let (interior_residual, contact_residual, _) = residuals_of(p, &g, &contact);
    Ok(FbSolution {
        g_field: g,
        contact_set: contact,
        interior_residual,
        contact_residual,
        iterations: used,
        outer_iterations: outer,
        clamp_activations: clamps,
        cycled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbResiduals {
    pub interior_residual: f64,
    pub contact_residual: f64,
    /// Absolute operator value at free nodes off the kink band (0 elsewhere).
    pub interior_field: Array2<f64>,
    /// Absolute contact defect on the front (0 elsewhere).
    pub contact_field: Array2<f64>,
}

/// Both residuals recomputed from the grid values alone, by a face-flux loop.
pub fn fb_residuals(solution: &FbSolution, problem: &FbProblem) -> FbResiduals {
    let n = problem.n;
    let d = problem.spacing();
    let g = &solution.g_field;
    let contact = &solution.contact_set;
    let cap = problem.lipschitz_bound * problem.lipschitz_bound;
    let tang = |i: usize, j: usize, along_i: bool| -> f64 {
        // Central difference orthogonal to the face direction, one-sided on the rim.
        let (lo, hi, c) = if along_i {
            (if j > 0 { Some(g[(i, j - 1)]) } else { None }, if j + 1 < n { Some(g[(i, j + 1)]) } else { None }, g[(i, j)])
        } else {
            (if i > 0 { Some(g[(i - 1, j)]) } else { None }, if i + 1 < n { Some(g[(i + 1, j)]) } else { None }, g[(i, j)])
        };
        match (lo, hi) {
            (Some(l), Some(h)) => (h - l) / (2.0 * d),
            (None, Some(h)) => (h - c) / d,
            (Some(l), None) => (c - l) / d,
            (None, None) => 0.0,
        }
    };
    // flux_i[(i, j)]: face between (i, j) and (i+1, j); flux_j likewise in j.
    let flux = |i: usize, j: usize, along_i: bool| -> f64 {
        let (k, l) = if along_i { (i + 1, j) } else { (i, j + 1) };
        let dn = (g[(k, l)] - g[(i, j)]) / d;
        let dt = 0.5 * (tang(i, j, along_i) + tang(k, l, along_i));
        let s2 = (dn * dn + dt * dt).min(cap);
        dn / (1.0 + s2).sqrt()
    };
    let flux_i = Array2::from_shape_fn((n - 1, n), |(i, j)| flux(i, j, true));
    let flux_j = Array2::from_shape_fn((n, n - 1), |(i, j)| flux(i, j, false));
    let band = kink_band(problem, contact);
    let mut interior_field = Array2::zeros((n, n));
    let mut contact_field = Array2::zeros((n, n));
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            if contact[(i, j)] {
                if neighbours4(i, j).iter().any(|&q| !contact[q]) {
                    let p = upwind_gradient(g, i, j, g[(i, j)], d);
                    let gh = ((problem.h_field[(i + 1, j)] - problem.h_field[(i - 1, j)]) / (2.0 * d),
                        (problem.h_field[(i, j + 1)] - problem.h_field[(i, j - 1)]) / (2.0 * d));
                    contact_field[(i, j)] = contact_defect(p, gh, problem.a).abs();
                }
            } else if !band[(i, j)] {
                let div = (flux_i[(i, j)] - flux_i[(i - 1, j)] + flux_j[(i, j)] - flux_j[(i, j - 1)]) / d;
                interior_field[(i, j)] = div.abs();
            }
        }
    }
    let interior_residual = interior_field.iter().copied().fold(0.0, f64::max);
    let contact_residual = contact_field.iter().copied().fold(0.0, f64::max);
    FbResiduals { interior_residual, contact_residual, interior_field, contact_field }
}

#[cfg(test)]
mod tests;
