//! Plane sweepouts of a ball, the min-max value over a family, and the wall-area
//! lower bound.

use crate::domain::{ConvexDomain, DomainKind};
use crate::energy::{capillarity_energy, contact_angle_residual};
use crate::flow::{freeze_blend, local_relax, FlowError, FlowOptions};
use crate::geom::Vec3;
use crate::surface::{build_disk_cap, disk_offset, target_edge_length, SurfaceError, SurfacePair};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepoutError {
    #[error("a sweepout needs at least 3 slices, got {0}")]
    TooFewSlices(usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone)]
pub struct Slice {
    pub t: f64,
    pub pair: SurfacePair,
    /// Offset of the Σ plane along the sweep axis at construction.
    pub offset: f64,
    pub volume_fraction: f64,
    pub f_a: f64,
}

#[derive(Debug, Clone)]
pub struct SweepoutFamily {
    pub slices: Vec<Slice>,
    pub axis: Vec3,
    /// Enclosed volume of a full discrete sphere at the family's mesh spacing.
    pub reference_volume: f64,
    /// Area of the same discrete sphere, i.e. `Area(∂M)` at the family's spacing.
    pub reference_wall_area: f64,
    pub center: Vec3,
}

/// Largest allowed jump of the volume fraction between consecutive slices.
pub const DEFAULT_DELTA_VOL: f64 = 0.05;

impl SweepoutFamily {
    pub fn f_values(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.f_a).collect()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.slices.iter().enumerate() {
            if s.f_a > self.slices[best].f_a {
                best = i;
            }
        }
        best
    }

    pub fn max_f(&self) -> f64 {
        self.slices[self.argmax()].f_a
    }

    /// Invariant violations of the family (empty iff valid).
    pub fn check(&self, delta_vol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.slices.len();
        if n < 3 {
            out.push(format!("only {n} slices"));
            return out;
        }
        if self.slices[0].volume_fraction.abs() > 1e-3 {
            out.push(format!("first volume fraction {}", self.slices[0].volume_fraction));
        }
        if (self.slices[n - 1].volume_fraction - 1.0).abs() > 1e-3 {
            out.push(format!("last volume fraction {}", self.slices[n - 1].volume_fraction));
        }
        for (i, w) in self.slices.windows(2).enumerate() {
            let jump = (w[1].volume_fraction - w[0].volume_fraction).abs();
            if jump > delta_vol {
                out.push(format!("volume jump {jump} between slices {i} and {}", i + 1));
            }
        }
        for (i, s) in self.slices.iter().enumerate() {
            if capillarity_energy(&s.pair).f_a != s.f_a {
                out.push(format!("stale F_a on slice {i}"));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,offset,volume_fraction,F_a\n");
        for sl in &self.slices {
            let _ = writeln!(s, "{:.11e},{:.11e},{:.11e},{:.11e}", sl.t, sl.offset, sl.volume_fraction, sl.f_a);
        }
        s
    }

    fn make_slice(&self, t: f64, offset: f64, pair: SurfacePair) -> Slice {
        let volume_fraction = pair.enclosed_volume(&self.center) / self.reference_volume;
        let f_a = capillarity_energy(&pair).f_a;
        Slice { t, pair, offset, volume_fraction, f_a }
    }
}

fn ball_radius(domain: &ConvexDomain) -> Result<f64, SurfaceError> {
    match domain.kind {
        DomainKind::Ball { radius } => Ok(radius),
        _ => Err(SurfaceError::WrongDomain("ball")),
    }
}

/// Family of disk-caps sweeping the ball along `axis`.
///
/// Interior slices have offsets uniformly spaced in `[−R + h, R − h]`; the first
/// and last slices are tiny caps of radius `2h` at the poles.
pub fn plane_sweep(
    domain: &ConvexDomain,
    axis: Vec3,
    n_slices: usize,
    theta: f64,
    resolution: usize,
) -> Result<SweepoutFamily, SweepoutError> {
    if n_slices < 3 {
        return Err(SweepoutError::TooFewSlices(n_slices));
    }
    let radius = ball_radius(domain)?;
    let axis = axis.normalize();
    let h = target_edge_length(radius, resolution);
    let lower = build_disk_cap(domain, axis, 0.0, theta, resolution)?;
    let upper = build_disk_cap(domain, -axis, 0.0, theta, resolution)?;
    let reference_volume = lower.enclosed_volume(&domain.center) + upper.enclosed_volume(&domain.center);
    let reference_wall_area = capillarity_energy(&lower).area_gamma + capillarity_energy(&upper).area_gamma;
    let mut family = SweepoutFamily { slices: Vec::new(), axis, reference_volume, reference_wall_area, center: domain.center };
    let pole = (radius * radius - 4.0 * h * h).max(0.0).sqrt();
    let interior = n_slices - 2;
    let offsets: Vec<f64> = std::iter::once(-pole)
        .chain((0..interior).map(|k| {
            if interior == 1 {
                0.0
            } else {
                -radius + h + (2.0 * (radius - h)) * k as f64 / (interior - 1) as f64
            }
        }))
        .chain(std::iter::once(pole))
        .collect();
    let pairs: Vec<Result<SurfacePair, SurfaceError>> = {
        use rayon::prelude::*;
        offsets.par_iter().map(|&d| build_disk_cap(domain, axis, d, theta, resolution)).collect()
    };
    for (i, (d, pair)) in offsets.iter().zip(pairs).enumerate() {
        let t = i as f64 / (n_slices - 1) as f64;
        let slice = family.make_slice(t, *d, pair?);
        family.slices.push(slice);
    }
    Ok(family)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxOptions {
    pub max_outer: usize,
    /// Stop once an outer iteration lowers the max by less than this.
    pub tol_m0: f64,
    /// Radius of the relaxation ball around the Σ centroid of the max slice.
    pub region_radius: f64,
    /// `ε₀` as a fraction of the initial max `F_a`.
    pub eps0_fraction: f64,
    pub flow: FlowOptions,
    pub delta_vol: f64,
}

impl Default for MinMaxOptions {
    fn default() -> Self {
        Self {
            max_outer: 8,
            tol_m0: 1e-4,
            region_radius: 0.5,
            eps0_fraction: 0.1,
            flow: FlowOptions { max_steps: 300, grad_tol: 1e-6, ..FlowOptions::default() },
            delta_vol: DEFAULT_DELTA_VOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinMaxStatus {
    Converged,
    /// `max_outer` iterations each still lowered the max by more than `tol_m0`.
    NoProgress,
}

#[derive(Debug, Clone)]
pub struct MinMaxResult {
    pub m0_estimate: f64,
    pub critical_slice: SurfacePair,
    pub critical_t: f64,
    pub critical_index: usize,
    /// Offset of the critical slice's Σ along the sweep axis.
    pub critical_offset: f64,
    /// `(iteration, max F_a)` with iteration 0 the input family.
    pub history: Vec<(usize, f64)>,
    pub status: MinMaxStatus,
    pub family: SweepoutFamily,
    pub epsilons: Vec<f64>,
}

fn sigma_centroid(pair: &SurfacePair) -> Vec3 {
    let in_sigma = pair.sigma_vertex_set();
    let (sum, count) = pair
        .vertices
        .iter()
        .zip(&in_sigma)
        .filter(|(_, s)| **s)
        .fold((Vec3::zeros(), 0usize), |(s, c), (v, _)| (s + v, c + 1));
    sum / count.max(1) as f64
}

/// Repeatedly relaxes the max slice and its neighbours near the max slice's Σ
/// centroid under the barrier `ε_k = ε₀ / 2^k`; a candidate family is kept only if it
/// lowers the max and stays continuous in volume.
pub fn minmax(
    family: &SweepoutFamily,
    domain: &ConvexDomain,
    options: &MinMaxOptions,
) -> Result<MinMaxResult, SweepoutError> {
    let mut current = family.clone();
    let eps0 = options.eps0_fraction * current.max_f();
    let mut history = vec![(0, current.max_f())];
    let mut epsilons = Vec::new();
    let mut status = MinMaxStatus::NoProgress;
    let n = current.slices.len();
    for k in 0..options.max_outer {
        let eps = eps0 / 2f64.powi(k as i32);
        epsilons.push(eps);
        let old_max = current.max_f();
        let i = current.argmax();
        let center = sigma_centroid(&current.slices[i].pair);
        let flow = FlowOptions { barrier_epsilon: Some(eps), ..options.flow.clone() };
        let mut candidate = current.clone();
        let lo = i.saturating_sub(1).max(1);
        let hi = (i + 1).min(n - 2);
        for j in lo..=hi {
            let slice = &current.slices[j];
            let relaxed = local_relax(&slice.pair, domain, &center, options.region_radius, &flow)?.pair;
            let pair = if j == i {
                relaxed
            } else {
                // Neighbours move halfway so the family stays continuous.
                freeze_blend(&slice.pair, &relaxed, domain, &center, options.region_radius, 0.5)?
            };
            candidate.slices[j] = candidate.make_slice(slice.t, slice.offset, pair);
        }
        let new_max = candidate.max_f();
        let continuous = candidate.check(options.delta_vol).is_empty() || !current.check(options.delta_vol).is_empty();
        let improved = new_max < old_max && continuous;
        if improved {
            current = candidate;
        }
        history.push((k + 1, current.max_f()));
        if !improved || old_max - new_max < options.tol_m0 {
            status = MinMaxStatus::Converged;
            break;
        }
    }
    let idx = current.argmax();
    let crit = &current.slices[idx];
    Ok(MinMaxResult {
        m0_estimate: crit.f_a,
        critical_slice: crit.pair.clone(),
        critical_t: crit.t,
        critical_index: idx,
        critical_offset: disk_offset(&crit.pair, &current.center, &current.axis),
        history,
        status,
        epsilons,
        family: current,
    })
}

impl MinMaxResult {
    /// Largest contact-angle residual on the critical slice.
    pub fn critical_residual(&self, domain: &ConvexDomain) -> Result<f64, SurfaceError> {
        Ok(contact_angle_residual(&self.critical_slice, domain)?.iter().fold(0.0, |m, r| m.max(r.abs())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// `m₀ − a·Area(∂M)` with the wall area of a discrete sphere at the family's
    /// spacing, so that both terms carry the same discretization error.
    pub margin: f64,
    /// `m₀ − a·Area(∂M)` with the exact wall area.
    pub margin_exact_wall: f64,
    /// `π R² (1 − a)²` for a ball, `None` otherwise.
    pub analytic: Option<f64>,
}

pub fn lower_bound_check(domain: &ConvexDomain, theta: f64, result: &MinMaxResult) -> LowerBound {
    let a = theta.cos();
    let analytic = match domain.kind {
        DomainKind::Ball { radius } => Some(std::f64::consts::PI * radius * radius * (1.0 - a) * (1.0 - a)),
        _ => None,
    };
    LowerBound {
        margin: result.m0_estimate - a * result.family.reference_wall_area,
        margin_exact_wall: result.m0_estimate - a * domain.boundary_area(),
        analytic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn distance(&self, other: &Ball) -> f64 {
        ((self.center - other.center).norm() - self.radius - other.radius).max(0.0)
    }

    /// Open balls are disjoint iff their centers are at least `r₁ + r₂` apart.
    pub fn disjoint(&self, other: &Ball) -> bool {
        (self.center - other.center).norm() >= self.radius + other.radius
    }
}

/// `dist(U₁, U₂) ≥ factor · min(diam U₁, diam U₂)` for disjoint balls.
pub fn is_separated(u1: &Ball, u2: &Ball, factor: f64) -> bool {
    u1.disjoint(u2) && u1.distance(u2) >= factor * u1.diameter().min(u2.diameter())
}

pub fn is_admissible(u1: &Ball, u2: &Ball) -> bool {
    is_separated(u1, u2, 4.0)
}

#[cfg(test)]
mod tests;
