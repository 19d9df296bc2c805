//! Small geometric kernels shared by the mesh, energy and analysis code.

use nalgebra::Vector3;
use std::f64::consts::PI;

pub type Vec3 = Vector3<f64>;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

pub fn triangle_area(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> f64 {
    0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
}

/// Unnormalized normal `(p1 - p0) x (p2 - p0)`; its norm is twice the area.
pub fn triangle_normal(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> Vec3 {
    (p1 - p0).cross(&(p2 - p0))
}

/// Gradient of the triangle area with respect to each corner.
///
/// Returns zeros for a degenerate triangle, where the area is not differentiable.
pub fn triangle_area_gradient(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> [Vec3; 3] {
    let n = triangle_normal(p0, p1, p2);
    let len = n.norm();
    if len == 0.0 {
        return [Vec3::zeros(); 3];
    }
    let n = n / len;
    [
        0.5 * n.cross(&(p2 - p1)),
        0.5 * n.cross(&(p0 - p2)),
        0.5 * n.cross(&(p1 - p0)),
    ]
}

/// Any unit vector orthogonal to `v` (deterministic choice).
pub fn orthogonal_unit(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    v.cross(&a).normalize()
}

/// Right-handed orthonormal pair `(e1, e2)` completing the unit `axis`.
pub fn frame_from_axis(axis: &Vec3) -> (Vec3, Vec3) {
    let e1 = orthogonal_unit(axis);
    let e2 = axis.cross(&e1);
    (e1, e2)
}

pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Area of the intersection of a planar triangle with the closed ball `B(center, radius)`.
///
/// The ball cuts the triangle's plane in a disk; the area of triangle ∩ disk is the
/// signed sum over the edges of (disk center, edge) sectors clipped to the disk.
pub fn triangle_ball_area(p0: &Vec3, p1: &Vec3, p2: &Vec3, center: &Vec3, radius: f64) -> f64 {
    let n = triangle_normal(p0, p1, p2);
    let twice_area = n.norm();
    if twice_area == 0.0 {
        return 0.0;
    }
    let n = n / twice_area;
    let offset = (center - p0).dot(&n);
    let r2 = radius * radius - offset * offset;
    if r2 <= 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    // Fast paths: fully inside or too far away.
    let d0 = (p0 - center).norm_squared();
    let d1 = (p1 - center).norm_squared();
    let d2 = (p2 - center).norm_squared();
    let rr = radius * radius;
    if d0 <= rr && d1 <= rr && d2 <= rr {
        return 0.5 * twice_area;
    }
    let c = center - offset * n;
    let e1 = (p1 - p0).normalize();
    let e2 = n.cross(&e1);
    let to2 = |p: &Vec3| {
        let q = p - c;
        (q.dot(&e1), q.dot(&e2))
    };
    let a = to2(p0);
    let b = to2(p1);
    let d = to2(p2);
    let s = sector_clip_area(a, b, r) + sector_clip_area(b, d, r) + sector_clip_area(d, a, r);
    s.abs().min(0.5 * twice_area)
}

/// Signed area of triangle (origin, a, b) intersected with the disk of radius `r` at the origin.
fn sector_clip_area(a: (f64, f64), b: (f64, f64), r: f64) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    if cross == 0.0 {
        return 0.0;
    }
    let da = (a.0 * a.0 + a.1 * a.1).sqrt();
    let db = (b.0 * b.0 + b.1 * b.1).sqrt();
    let ang = |u: (f64, f64), v: (f64, f64)| (u.0 * v.1 - u.1 * v.0).atan2(u.0 * v.0 + u.1 * v.1);
    let tri = |u: (f64, f64), v: (f64, f64)| 0.5 * (u.0 * v.1 - u.1 * v.0);
    let sector = |u: (f64, f64), v: (f64, f64)| 0.5 * r * r * ang(u, v);
    if da <= r && db <= r {
        return tri(a, b);
    }
    // Parametrize the segment a + t (b - a) and intersect with the circle.
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (a.0 * dx + a.1 * dy);
    let qc = a.0 * a.0 + a.1 * a.1 - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    let at = |t: f64| (a.0 + t * dx, a.1 + t * dy);
    if disc <= 0.0 {
        return sector(a, b);
    }
    let sq = disc.sqrt();
    let t1 = (-qb - sq) / (2.0 * qa);
    let t2 = (-qb + sq) / (2.0 * qa);
    if da <= r {
        // a inside, b outside: exit at t2
        let p = at(t2);
        return tri(a, p) + sector(p, b);
    }
    if db <= r {
        let p = at(t1);
        return sector(a, p) + tri(p, b);
    }
    if t1 >= 1.0 || t2 <= 0.0 || !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) {
        return sector(a, b);
    }
    let p = at(t1);
    let q = at(t2);
    sector(a, p) + tri(p, q) + sector(q, b)
}

/// Unsigned angle between two vectors in `[0, π]`.
pub fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

pub fn deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

pub fn rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn area_gradient_matches_finite_differences() {
        let p = [
            Vec3::new(0.1, 0.2, -0.3),
            Vec3::new(1.0, 0.1, 0.2),
            Vec3::new(0.3, 0.9, 0.5),
        ];
        let g = triangle_area_gradient(&p[0], &p[1], &p[2]);
        let eps = 1e-6;
        for i in 0..3 {
            for k in 0..3 {
                let mut plus = p;
                let mut minus = p;
                plus[i][k] += eps;
                minus[i][k] -= eps;
                let fd = (triangle_area(&plus[0], &plus[1], &plus[2])
                    - triangle_area(&minus[0], &minus[1], &minus[2]))
                    / (2.0 * eps);
                assert!((fd - g[i][k]).abs() < 1e-8, "{fd} vs {}", g[i][k]);
            }
        }
    }

    #[test]
    fn ball_clip_limits() {
        let p0 = Vec3::new(0.0, 0.0, 0.0);
        let p1 = Vec3::new(1.0, 0.0, 0.0);
        let p2 = Vec3::new(0.0, 1.0, 0.0);
        let big = triangle_ball_area(&p0, &p1, &p2, &Vec3::zeros(), 10.0);
        assert!((big - 0.5).abs() < 1e-15);
        // quarter disk at the right-angle corner
        let small = triangle_ball_area(&p0, &p1, &p2, &Vec3::zeros(), 0.3);
        assert!((small - PI * 0.09 / 4.0).abs() < 1e-14);
        // ball centered off-plane: disk of radius sqrt(0.3^2 - 0.1^2)
        let off = triangle_ball_area(&p0, &p1, &p2, &Vec3::new(0.0, 0.0, 0.1), 0.3);
        assert!((off - PI * 0.08 / 4.0).abs() < 1e-14);
        assert_eq!(triangle_ball_area(&p0, &p1, &p2, &Vec3::new(5.0, 5.0, 0.0), 1.0), 0.0);
    }

    #[test]
    fn ball_clip_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = Vec3::new(-0.4, -0.3, 0.05);
        let p1 = Vec3::new(0.7, -0.2, 0.0);
        let p2 = Vec3::new(0.1, 0.8, -0.05);
        let c = Vec3::new(0.2, 0.1, 0.0);
        let r = 0.45;
        let area = triangle_area(&p0, &p1, &p2);
        let n = 400_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let x = p0 + u * (p1 - p0) + v * (p2 - p0);
            if (x - c).norm() <= r {
                hits += 1;
            }
        }
        let mc = area * hits as f64 / n as f64;
        let exact = triangle_ball_area(&p0, &p1, &p2, &c, r);
        assert!((mc - exact).abs() < 3e-3, "{mc} vs {exact}");
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
