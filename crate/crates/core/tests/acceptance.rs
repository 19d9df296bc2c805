//! Acceptance suite. Each criterion is measured through the library and judged here
//! against oracles computed independently in this file.

use capillary::record::Record;
use capillary::verify::{self, Outcome};
use std::f64::consts::PI;
use std::process::Command;

const A: f64 = 0.5;

fn num(o: &Outcome, key: &str) -> f64 {
    o.record.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

/// `max_d π(1−d²) + 2πa(1+d)` by golden-section search on `(−1, 1)`.
fn disk_cap_max(a: f64) -> (f64, f64) {
    let f = |d: f64| PI * (1.0 - d * d) + 2.0 * PI * a * (1.0 + d);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let d = 0.5 * (lo + hi);
    (d, f(d))
}

/// First zero of `J₀` from its power series, by bisection.
fn bessel_j0_first_zero() -> f64 {
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..60 {
            term *= -(x * x) / (4.0 * (k * k) as f64);
            sum += term;
        }
        sum
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if j0(lo) * j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Line {
    id: &'static str,
    passed: bool,
    text: String,
}

fn judge(id: &'static str, o: &Outcome, passed: bool, note: String) -> Line {
    let ok = passed && o.passed;
    let status = if ok { "PASS" } else { "FAIL" };
    Line { id, passed: ok, text: format!("{status} {id} {} [{note}] ({:.1} s)", o.title, o.seconds) }
}

fn determinism(seed: u64) -> Line {
    let bin = env!("CARGO_BIN_EXE_capillary");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.cfg");
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut records = Vec::new();
    for run in ["first", "second"] {
        let out = tmp.path().join(run);
        let status = Command::new(bin)
            .args(["verify", "--quiet", "--config", config, "--seed", &seed.to_string(), "--out"])
            .arg(&out)
            .status()
            .expect("run the capillary binary");
        records.push((status.code(), std::fs::read(out.join("verify.rec")).unwrap_or_default()));
    }
    let same = !records[0].1.is_empty() && records[0] == records[1];
    let parsed = Record::parse(&String::from_utf8_lossy(&records[0].1));
    let hashed = parsed.get("config_hash").is_some_and(|h| h.len() == 64) && parsed.get("version").is_some();
    let ok = same && hashed;
    Line {
        id: "C10",
        passed: ok,
        text: format!(
            "{} C10 determinism [byte-identical verify records: {same}, hash and version embedded: {hashed}, exit codes {:?}/{:?}]",
            if ok { "PASS" } else { "FAIL" },
            records[0].0,
            records[1].0
        ),
    }
}

fn main() {
    let seed = 1;
    let outcomes = verify::run_suite(seed);
    let by_id = |id: &str| outcomes.iter().find(|o| o.id == id).expect("criterion present");
    let mut lines = Vec::new();

    let o = by_id("C1");
    let (res, g, bound) = (num(o, "residual"), num(o, "grad_norm"), num(o, "grad_bound"));
    let (rr, rg) = (num(o, "residual_ratio"), num(o, "grad_ratio"));
    let ok = res <= 1e-2 && g <= bound && rr <= 0.625 && rg <= 0.625 && o.seconds <= 10.0;
    lines.push(judge("C1", o, ok, format!("residual {res:.3e}, grad {g:.3e} <= {bound:.3e}, refinement ratios {rr:.3}, {rg:.3}")));

    let (d_star, m0) = disk_cap_max(A);
    let o = by_id("C2");
    let (m, d) = (num(o, "m0_estimate"), num(o, "critical_offset"));
    let ok = (m - m0).abs() <= 0.02 * m0 && (d - d_star).abs() <= 0.02 && o.seconds <= 60.0;
    lines.push(judge("C2", o, ok, format!("m0 {m:.6} vs {m0:.6}, offset {d:.4} vs {d_star:.4}")));

    let o = by_id("C3");
    let mut ok = true;
    let mut note = Vec::new();
    for a in [0.2f64, 0.5, 0.8] {
        let margin = num(o, &format!("margin_a{a}"));
        let (_, m0) = disk_cap_max(a);
        let exact = m0 - a * 4.0 * PI;
        ok &= margin >= 0.9 * exact;
        note.push(format!("a={a}: {margin:.4} >= {:.4}", 0.9 * exact));
    }
    lines.push(judge("C3", o, ok, note.join(", ")));

    let o = by_id("C4");
    let worst = num(o, "worst_relative_error");
    let target = PI * (1.0 + A) / 2.0;
    let ok = num(o, "violations") == 0.0 && (num(o, "density_target") / target - 1.0).abs() < 1e-10 && worst <= 0.02;
    lines.push(judge("C4", o, ok, format!("violations {}, density limit relative error {worst:.3e}", num(o, "violations"))));

    let o = by_id("C5");
    let worst = num(o, "worst_relative_error");
    let ok = num(o, "probes") == 50.0 && worst <= 1e-6;
    lines.push(judge("C5", o, ok, format!("50 probes, worst relative error {worst:.3e}")));

    let o = by_id("C6a");
    let l = num(o, "lambda_min");
    lines.push(judge("C6a", o, l >= -0.05, format!("lambda_min {l:.4} >= -0.05")));

    let j01 = bessel_j0_first_zero();
    let o = by_id("C6b");
    let flat = num(o, "flat_lambda_min");
    let ok = num(o, "near_zero") >= 2.0 && (flat - j01 * j01).abs() <= 0.02 * j01 * j01;
    lines.push(judge("C6b", o, ok, format!("{} near-zero eigenvalues, flat disk {flat:.4} vs j01^2 {:.4}", num(o, "near_zero"), j01 * j01)));

    let o = by_id("C7");
    let (off, slope, ratio) = (num(o, "off_band_error"), num(o, "slope_relative_error"), num(o, "band_ratio"));
    let ok = off <= 1e-6 && slope <= 0.02 && ratio >= 1.8 && o.seconds <= 10.0;
    lines.push(judge("C7", o, ok, format!("off-band error {off:.3e}, slope error {slope:.3e} (slope sqrt(3)), band ratio {ratio:.3}")));

    let o = by_id("C8");
    let (dev, bound) = (num(o, "max_deviation"), num(o, "bound"));
    lines.push(judge("C8", o, dev <= bound, format!("deviation {dev:.3e} <= 5h^2 = {bound:.3e}")));

    let o = by_id("C9");
    let (ang, rms) = (num(o, "worst_dihedral_deviation_deg"), num(o, "worst_rms_over_h"));
    lines.push(judge("C9", o, ang <= 2.0 && rms <= 2.0, format!("dihedral off 60 deg by {ang:.3} deg, rms/h {rms:.3}")));

    lines.push(determinism(seed));

    for l in &lines {
        println!("{}", l.text);
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!("acceptance: {} of {} criteria passed", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
