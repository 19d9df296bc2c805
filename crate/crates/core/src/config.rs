//! Line-oriented `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Angles are given in degrees, vectors
//! as comma-separated triples. Unknown keys are errors.

use crate::domain::ConvexDomain;
use crate::geom::Vec3;
use crate::record::fmt_num;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Ball { center: Vec3, radius: f64 },
    Ellipsoid { center: Vec3, radii: [f64; 3] },
    LevelSet { center: Vec3, radii: [f64; 3], quartic: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> ConvexDomain {
        match *self {
            DomainSpec::Ball { center, radius } => ConvexDomain::ball(center, radius),
            DomainSpec::Ellipsoid { center, radii } => ConvexDomain::ellipsoid(center, radii),
            DomainSpec::LevelSet { center, radii, quartic } => ConvexDomain::level_set(center, radii, quartic),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub theta_deg: f64,
    pub resolution: usize,
    /// Offset of the disk-cap seed along `axis`; defaults to `R cos θ`.
    pub offset: Option<f64>,
    pub axis: Vec3,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub flow_max_steps: usize,
    pub flow_grad_tol: f64,
    pub sweep_slices: usize,
    pub minmax_max_outer: usize,
    pub stability_num_eigs: usize,
    pub monotonicity_points: usize,
    pub monotonicity_radius_min: f64,
    pub monotonicity_radius_max: f64,
    pub monotonicity_radius_count: usize,
    pub blowup_resolution: usize,
    pub fb_n: usize,
    pub fb_tol: f64,
    pub fb_max_iter: usize,
    pub fb_lipschitz_bound: f64,
    pub fb_lift: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Ball { center: Vec3::zeros(), radius: 1.0 },
            theta_deg: 60.0,
            resolution: 32,
            offset: None,
            axis: Vec3::z(),
            seed: 1,
            out_dir: PathBuf::from("out"),
            flow_max_steps: 2000,
            flow_grad_tol: 1e-9,
            sweep_slices: 101,
            minmax_max_outer: 8,
            stability_num_eigs: 6,
            monotonicity_points: 5,
            monotonicity_radius_min: 0.25,
            monotonicity_radius_max: 0.5,
            monotonicity_radius_count: 8,
            blowup_resolution: 192,
            fb_n: 129,
            fb_tol: 1e-9,
            fb_max_iter: 400_000,
            fb_lipschitz_bound: 10.0,
            fb_lift: 0.0,
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, found `{s}`"));
    }
    Ok([parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?])
}

impl RunConfig {
    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    pub fn a(&self) -> f64 {
        self.theta().cos()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut kind = String::from("ball");
        let mut center = Vec3::zeros();
        let mut radius = 1.0;
        let mut radii = [1.0; 3];
        let mut quartic = 0.0;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: body.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            let err = |message: String| ConfigError::Value { line, key: key.to_string(), message };
            let f = || parse_f64(value).map_err(err);
            let u = || parse_usize(value).map_err(err);
            match key {
                "domain" => kind = value.to_string(),
                "domain.center" => center = Vec3::from(parse_triple(value).map_err(err)?),
                "domain.radius" => radius = f()?,
                "domain.radii" => radii = parse_triple(value).map_err(err)?,
                "domain.quartic" => quartic = f()?,
                "theta" => c.theta_deg = f()?,
                "resolution" => c.resolution = u()?,
                "offset" => c.offset = Some(f()?),
                "axis" => c.axis = Vec3::from(parse_triple(value).map_err(err)?),
                "seed" => c.seed = value.parse().map_err(|_| err(format!("`{value}` is not an unsigned integer")))?,
                "out" => c.out_dir = PathBuf::from(value),
                "flow.max_steps" => c.flow_max_steps = u()?,
                "flow.grad_tol" => c.flow_grad_tol = f()?,
                "sweep.slices" => c.sweep_slices = u()?,
                "minmax.max_outer" => c.minmax_max_outer = u()?,
                "stability.num_eigs" => c.stability_num_eigs = u()?,
                "monotonicity.points" => c.monotonicity_points = u()?,
                "monotonicity.radius_min" => c.monotonicity_radius_min = f()?,
                "monotonicity.radius_max" => c.monotonicity_radius_max = f()?,
                "monotonicity.radius_count" => c.monotonicity_radius_count = u()?,
                "blowup.resolution" => c.blowup_resolution = u()?,
                "fb.n" => c.fb_n = u()?,
                "fb.tol" => c.fb_tol = f()?,
                "fb.max_iter" => c.fb_max_iter = u()?,
                "fb.lipschitz_bound" => c.fb_lipschitz_bound = f()?,
                "fb.lift" => c.fb_lift = f()?,
                _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
            }
        }
        c.domain = match kind.as_str() {
            "ball" => DomainSpec::Ball { center, radius },
            "ellipsoid" => DomainSpec::Ellipsoid { center, radii },
            "level_set" => DomainSpec::LevelSet { center, radii, quartic },
            other => {
                return Err(ConfigError::Invalid {
                    field: "domain".into(),
                    message: format!("unknown kind `{other}` (ball, ellipsoid, level_set)"),
                })
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, message: String| Err(ConfigError::Invalid { field: field.into(), message });
        if !(self.theta_deg > 0.0 && self.theta_deg < 90.0) {
            return bad("theta", format!("{} outside the open interval (0, 90) degrees", self.theta_deg));
        }
        if self.resolution < 8 {
            return bad("resolution", format!("{} is below 8", self.resolution));
        }
        if self.blowup_resolution < 8 {
            return bad("blowup.resolution", format!("{} is below 8", self.blowup_resolution));
        }
        match &self.domain {
            DomainSpec::Ball { radius, .. } if !(*radius > 0.0) => return bad("domain.radius", "must be positive".into()),
            DomainSpec::Ellipsoid { radii, .. } | DomainSpec::LevelSet { radii, .. } if radii.iter().any(|r| !(*r > 0.0)) => {
                return bad("domain.radii", "must be positive".into())
            }
            DomainSpec::LevelSet { quartic, .. } if *quartic < 0.0 => return bad("domain.quartic", "must be nonnegative".into()),
            _ => {}
        }
        if self.axis.norm() == 0.0 {
            return bad("axis", "must be nonzero".into());
        }
        if self.sweep_slices < 3 {
            return bad("sweep.slices", format!("{} is below 3", self.sweep_slices));
        }
        if !(self.flow_grad_tol > 0.0) {
            return bad("flow.grad_tol", "must be positive".into());
        }
        if self.monotonicity_radius_count < 2 || !(self.monotonicity_radius_min > 0.0 && self.monotonicity_radius_max > self.monotonicity_radius_min) {
            return bad("monotonicity.radius_*", "need 0 < radius_min < radius_max and at least 2 radii".into());
        }
        if self.monotonicity_points == 0 {
            return bad("monotonicity.points", "must be positive".into());
        }
        if self.fb_n < 3 || !(self.fb_tol > 0.0) || !(self.fb_lipschitz_bound > 0.0) || self.fb_lift < 0.0 {
            return bad("fb.*", "need n ≥ 3, tol > 0, lipschitz_bound > 0, lift ≥ 0".into());
        }
        Ok(())
    }

    /// Canonical text form; its hash identifies the run.
    pub fn canonical(&self) -> String {
        let v = |x: &Vec3| format!("{},{},{}", fmt_num(x.x), fmt_num(x.y), fmt_num(x.z));
        let t = |r: &[f64; 3]| format!("{},{},{}", fmt_num(r[0]), fmt_num(r[1]), fmt_num(r[2]));
        let mut lines = Vec::new();
        match &self.domain {
            DomainSpec::Ball { center, radius } => {
                lines.push("domain=ball".to_string());
                lines.push(format!("domain.center={}", v(center)));
                lines.push(format!("domain.radius={}", fmt_num(*radius)));
            }
            DomainSpec::Ellipsoid { center, radii } => {
                lines.push("domain=ellipsoid".to_string());
                lines.push(format!("domain.center={}", v(center)));
                lines.push(format!("domain.radii={}", t(radii)));
            }
            DomainSpec::LevelSet { center, radii, quartic } => {
                lines.push("domain=level_set".to_string());
                lines.push(format!("domain.center={}", v(center)));
                lines.push(format!("domain.radii={}", t(radii)));
                lines.push(format!("domain.quartic={}", fmt_num(*quartic)));
            }
        }
        lines.push(format!("theta={}", fmt_num(self.theta_deg)));
        lines.push(format!("resolution={}", self.resolution));
        if let Some(d) = self.offset {
            lines.push(format!("offset={}", fmt_num(d)));
        }
        lines.push(format!("axis={}", v(&self.axis)));
        lines.push(format!("seed={}", self.seed));
        lines.push(format!("flow.max_steps={}", self.flow_max_steps));
        lines.push(format!("flow.grad_tol={}", fmt_num(self.flow_grad_tol)));
        lines.push(format!("sweep.slices={}", self.sweep_slices));
        lines.push(format!("minmax.max_outer={}", self.minmax_max_outer));
        lines.push(format!("stability.num_eigs={}", self.stability_num_eigs));
        lines.push(format!("monotonicity.points={}", self.monotonicity_points));
        lines.push(format!("monotonicity.radius_min={}", fmt_num(self.monotonicity_radius_min)));
        lines.push(format!("monotonicity.radius_max={}", fmt_num(self.monotonicity_radius_max)));
        lines.push(format!("monotonicity.radius_count={}", self.monotonicity_radius_count));
        lines.push(format!("blowup.resolution={}", self.blowup_resolution));
        lines.push(format!("fb.n={}", self.fb_n));
        lines.push(format!("fb.tol={}", fmt_num(self.fb_tol)));
        lines.push(format!("fb.max_iter={}", self.fb_max_iter));
        lines.push(format!("fb.lipschitz_bound={}", fmt_num(self.fb_lipschitz_bound)));
        lines.push(format!("fb.lift={}", fmt_num(self.fb_lift)));
        lines.join("\n") + "\n"
    }

    /// SHA-256 of the canonical form, hex encoded. The output directory is not part of it.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_canonical_text() {
        let c = RunConfig::default();
        let again = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(again.canonical(), c.canonical());
        assert_eq!(again.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn comments_blank_lines_and_overrides() {
        let c = RunConfig::parse("# run\n\ntheta = 45 # degrees\nresolution=16\ndomain = ellipsoid\ndomain.radii = 1, 0.8, 0.6\n").unwrap();
        assert_eq!(c.theta_deg, 45.0);
        assert_eq!(c.resolution, 16);
        assert!(matches!(c.domain, DomainSpec::Ellipsoid { radii, .. } if radii == [1.0, 0.8, 0.6]));
        assert!((c.a() - 45f64.to_radians().cos()).abs() < 1e-15);
    }

    #[test]
    fn open_interval_for_theta() {
        for t in ["90", "0", "120", "-5"] {
            let e = RunConfig::parse(&format!("theta = {t}\n")).unwrap_err();
            assert!(matches!(e, ConfigError::Invalid { ref field, .. } if field == "theta"), "{e}");
        }
        assert!(RunConfig::parse("theta = 89.9\n").is_ok());
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        assert_eq!(RunConfig::parse("theta 60\n").unwrap_err(), ConfigError::Syntax { line: 1, text: "theta 60".into() });
        assert_eq!(RunConfig::parse("\nbogus = 1\n").unwrap_err(), ConfigError::UnknownKey { line: 2, key: "bogus".into() });
        assert!(matches!(RunConfig::parse("resolution = x\n").unwrap_err(), ConfigError::Value { line: 1, .. }));
        assert!(matches!(RunConfig::parse("seed = 1\nseed = 2\n").unwrap_err(), ConfigError::Duplicate { line: 2, .. }));
        assert!(matches!(RunConfig::parse("resolution = 4\n").unwrap_err(), ConfigError::Invalid { .. }));
        assert!(matches!(RunConfig::parse("domain = torus\n").unwrap_err(), ConfigError::Invalid { .. }));
    }

    #[test]
    fn hash_tracks_content_but_not_output_directory() {
        let a = RunConfig::parse("seed = 3\nout = x\n").unwrap();
        let b = RunConfig::parse("seed = 3\nout = y\n").unwrap();
        let c = RunConfig::parse("seed = 4\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
