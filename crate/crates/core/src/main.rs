use capillary::config::RunConfig;
use capillary::driver::{run, Command, DriverError};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "capillary", version, about = "Capillary surfaces in convex bodies: flows, sweepouts and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized probes; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Relax a disk-cap seed by constrained gradient descent.
    Solve,
    /// Plane sweepout profile as CSV.
    Sweep,
    /// Plane sweep followed by min-max relaxation.
    Minmax,
    /// Stability spectrum of the disk-cap seed.
    Stability,
    /// Density ratios at contact points.
    Monotonicity,
    /// Blow-up wedge fit at a contact point.
    Blowup,
    /// Free-boundary graph solver on the wedge datum.
    Fbsolve,
    /// Full acceptance suite.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Sweep => Command::Sweep,
            Cmd::Minmax => Command::Minmax,
            Cmd::Stability => Command::Stability,
            Cmd::Monotonicity => Command::Monotonicity,
            Cmd::Blowup => Command::Blowup,
            Cmd::Fbsolve => Command::Fbsolve,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, DriverError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|config| run(cli.command.into(), &config));
    match result {
        Ok(out) => {
            if !cli.quiet {
                for line in &out.lines {
                    println!("{line}");
                }
                print!("{}", out.record.to_text());
            }
            for v in &out.violations {
                eprintln!("violation: {v}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
