//! Orchestration of the subcommands: each builds its inputs from a [`RunConfig`],
//! writes its artifacts into the output directory and returns a summary record.

use crate::analysis::{blowup, density_ratio, local_mesh_size, stability_spectrum, StabilityOptions};
use crate::config::{ConfigError, DomainSpec, RunConfig};
use crate::domain::ConvexDomain;
use crate::energy::full_report;
use crate::fbsolver::{field_to_csv, solve_fb, FbError};
use crate::flow::{pull_tight, FlowOptions};
use crate::record::Record;
use crate::surface::{build_disk_cap, write_obj, SurfacePair};
use crate::sweepout::{lower_bound_check, minmax, plane_sweep, MinMaxOptions};
use crate::verify;
use std::fs;
use std::path::Path;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Minmax,
    Stability,
    Monotonicity,
    Blowup,
    Fbsolve,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Minmax => "minmax",
            Command::Stability => "stability",
            Command::Monotonicity => "monotonicity",
            Command::Blowup => "blowup",
            Command::Fbsolve => "fbsolve",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) => 2,
            DriverError::Invariant(_) => 1,
            DriverError::Numerical(_) | DriverError::Io { .. } => 3,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> DriverError {
    DriverError::Numerical(e.to_string())
}

/// Summary of a finished run. `violations` lists failed invariants; the artifacts are
/// already on disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: Record,
    pub violations: Vec<String>,
    /// Extra human-readable lines (the per-criterion lines of `verify`).
    pub lines: Vec<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            1
        }
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<(), DriverError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| DriverError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn write_pair(dir: &Path, name: &str, pair: &SurfacePair) -> Result<(), DriverError> {
    let mut buf = Vec::new();
    write_obj(pair, &mut buf).map_err(|e| DriverError::Io { path: name.to_string(), message: e.to_string() })?;
    write(dir, name, &buf)
}

fn seed_pair(config: &RunConfig, domain: &ConvexDomain) -> Result<SurfacePair, DriverError> {
    let radius = match config.domain {
        DomainSpec::Ball { radius, .. } => radius,
        _ => {
            return Err(DriverError::Config(ConfigError::Invalid {
                field: "domain".into(),
                message: "disk-cap seeds need a ball".into(),
            }))
        }
    };
    let d = config.offset.unwrap_or(radius * config.a());
    build_disk_cap(domain, config.axis, d, config.theta(), config.resolution).map_err(numerical)
}

fn flow_options(config: &RunConfig) -> FlowOptions {
    FlowOptions { max_steps: config.flow_max_steps, grad_tol: config.flow_grad_tol, ..FlowOptions::default() }
}

fn contact_points(pair: &SurfacePair, count: usize) -> Vec<crate::geom::Vec3> {
    let c = &pair.contact_polyline;
    (0..count.min(c.len())).map(|k| pair.vertices[c[k * c.len() / count]]).collect()
}

/// Runs one subcommand; artifacts go to `config.out_dir`.
pub fn run(command: Command, config: &RunConfig) -> Result<RunOutput, DriverError> {
    config.validate()?;
    let dir = config.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| DriverError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let domain = config.domain.build();
    let mut record = Record::new();
    record.text("command", command.name()).text("version", VERSION).text("config_hash", &config.hash());
    let mut violations = Vec::new();
    let mut lines = Vec::new();
    match command {
        Command::Solve => {
            let seed = seed_pair(config, &domain)?;
            let trace = pull_tight(&seed, &domain, &flow_options(config)).map_err(numerical)?;
            let report = full_report(&trace.pair, &domain).map_err(numerical)?;
            record.text("termination", &format!("{:?}", trace.termination)).int("steps", trace.steps() as i64);
            record.extend("", &report.to_record());
            violations.extend(trace.pair.validate(&domain).iter().map(|v| format!("{v:?}")));
            if trace.energies.windows(2).any(|w| w[1] > w[0]) {
                violations.push("energy increased along the flow".into());
            }
            write_pair(&dir, "solve.obj", &trace.pair)?;
            write(&dir, "flow.csv", trace.to_csv().as_bytes())?;
        }
        Command::Sweep => {
            let fam = plane_sweep(&domain, config.axis, config.sweep_slices, config.theta(), config.resolution).map_err(numerical)?;
            let i = fam.argmax();
            record.int("slices", fam.slices.len() as i64).int("argmax", i as i64);
            record.num("max_f", fam.max_f()).num("argmax_offset", fam.slices[i].offset).num("argmax_t", fam.slices[i].t);
            violations.extend(fam.check(crate::sweepout::DEFAULT_DELTA_VOL));
            write(&dir, "sweep.csv", fam.to_csv().as_bytes())?;
        }
        Command::Minmax => {
            let fam = plane_sweep(&domain, config.axis, config.sweep_slices, config.theta(), config.resolution).map_err(numerical)?;
            let options = MinMaxOptions { max_outer: config.minmax_max_outer, ..MinMaxOptions::default() };
            let res = minmax(&fam, &domain, &options).map_err(numerical)?;
            let lb = lower_bound_check(&domain, config.theta(), &res);
            record.num("m0_estimate", res.m0_estimate).num("critical_t", res.critical_t).num("critical_offset", res.critical_offset);
            record.int("outer_iterations", res.history.len() as i64 - 1).text("status", &format!("{:?}", res.status));
            record.num("critical_residual", res.critical_residual(&domain).map_err(numerical)?);
            record.num("lower_bound_margin", lb.margin).num("lower_bound_margin_exact_wall", lb.margin_exact_wall);
            if let Some(x) = lb.analytic {
                record.num("lower_bound_analytic", x);
            }
            violations.extend(res.family.check(options.delta_vol));
            write_pair(&dir, "critical.obj", &res.critical_slice)?;
            write(&dir, "minmax_family.csv", res.family.to_csv().as_bytes())?;
        }
        Command::Stability => {
            let pair = seed_pair(config, &domain)?;
            let options = StabilityOptions { num_eigs: config.stability_num_eigs, ..StabilityOptions::default() };
            let rep = stability_spectrum(&pair, &domain, &options).map_err(numerical)?;
            record.extend("", &rep.to_record());
            if rep.max_asymmetry > 1e-10 {
                violations.push(format!("stability matrix asymmetry {}", rep.max_asymmetry));
            }
        }
        Command::Monotonicity => {
            let pair = seed_pair(config, &domain)?;
            let n = config.monotonicity_radius_count;
            let (lo, hi) = (config.monotonicity_radius_min, config.monotonicity_radius_max);
            let radii: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let mut total = 0;
            for (k, x) in contact_points(&pair, config.monotonicity_points).iter().enumerate() {
                let rep = density_ratio(&pair, &domain, x, &radii).map_err(numerical)?;
                total += rep.violations;
                record.extend(&format!("point{k}."), &rep.to_record());
            }
            record.int("violations", total as i64);
            if total > 0 {
                violations.push(format!("{total} monotonicity violations"));
            }
        }
        Command::Blowup => {
            let mut c = config.clone();
            c.resolution = config.blowup_resolution;
            let pair = seed_pair(&c, &domain)?;
            let x = *contact_points(&pair, 1).first().ok_or_else(|| numerical("seed has no contact line"))?;
            let h = local_mesh_size(&pair, &x, 0.1);
            let rep = blowup(&pair, &domain, &x, &[0.4, 0.2, 4.0 * h]).map_err(numerical)?;
            record.num("local_h", h);
            record.extend("", &rep.to_record());
        }
        Command::Fbsolve => {
            let p = verify::wedge_problem(config.fb_n, config.a(), config.fb_lift, config.fb_lipschitz_bound);
            let sol = match solve_fb(&p, config.fb_tol, config.fb_max_iter) {
                Ok(s) => s,
                Err(e @ FbError::InvalidProblem(_)) => {
                    return Err(DriverError::Config(ConfigError::Invalid { field: "fb".into(), message: e.to_string() }))
                }
                Err(e) => return Err(numerical(e)),
            };
            record.int("n", p.n as i64).num("a", p.a).num("spacing", p.spacing());
            record.extend("", &sol.to_record());
            if sol.clamp_activations > 0 {
                violations.push(format!("{} slope clamp activations", sol.clamp_activations));
            }
            if sol.g_field.iter().zip(p.h_field.iter()).any(|(g, h)| g - h < -1e-12) {
                violations.push("obstacle violated".into());
            }
            write(&dir, "g.csv", field_to_csv(&sol.g_field).as_bytes())?;
            write(&dir, "contact.csv", field_to_csv(&sol.contact_set.mapv(|c| if c { 1.0 } else { 0.0 })).as_bytes())?;
        }
        Command::Verify => {
            let outcomes = verify::run_suite(config.seed);
            record.int("seed", config.seed as i64);
            record.extend("", &verify::summary(&outcomes));
            for o in &outcomes {
                lines.push(o.line());
                if !o.passed {
                    violations.push(format!("criterion {} failed", o.id));
                }
            }
        }
    }
    record.int("violations_count", violations.len() as i64);
    write(&dir, &format!("{}.rec", command.name()), record.to_text().as_bytes())?;
    Ok(RunOutput { record, violations, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_in(dir: &Path, extra: &str) -> RunConfig {
        let mut c = RunConfig::parse(extra).unwrap();
        c.out_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn sweep_writes_csv_with_max_near_ra() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config_in(tmp.path(), "resolution = 24\nsweep.slices = 101\n");
        let out = run(Command::Sweep, &c).unwrap();
        assert_eq!(out.exit_code(), 0, "{:?}", out.violations);
        let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
        let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
        let best = rows.iter().max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
        assert!((0.48..=0.52).contains(&best[1]), "{best:?}");
        let rec = Record::parse(&fs::read_to_string(tmp.path().join("sweep.rec")).unwrap());
        assert_eq!(rec.get("config_hash"), Some(c.hash().as_str()));
        assert_eq!(rec.get("version"), Some(VERSION));
    }

    #[test]
    fn records_are_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config_in(tmp.path(), "resolution = 16\n");
        let a = run(Command::Solve, &c).unwrap().record.to_text();
        let b = run(Command::Solve, &c).unwrap().record.to_text();
        assert_eq!(a, b);
        assert!(tmp.path().join("solve.obj").exists());
    }

    #[test]
    fn fbsolve_writes_fields() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config_in(tmp.path(), "fb.n = 33\n");
        let out = run(Command::Fbsolve, &c).unwrap();
        assert_eq!(out.exit_code(), 0);
        let g = fs::read_to_string(tmp.path().join("g.csv")).unwrap();
        assert_eq!(g.lines().count(), 33);
    }

    #[test]
    fn non_ball_seeds_are_config_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config_in(tmp.path(), "domain = ellipsoid\ndomain.radii = 1, 0.9, 0.8\n");
        let e = run(Command::Solve, &c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
