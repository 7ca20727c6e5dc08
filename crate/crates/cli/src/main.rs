//! `optdiff` — synthesize, inspect and simulate rate-optimal diffusions.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical error, 4 failed
//! verification under `table --strict`.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{default_sigma_hat, default_table_entries, execute, load_table_entries, Outcome, Resolved, RunManifest};
use optdiff::io::SpecFile;
use optdiff::sim::{BoundaryMode, SimConfig};
use optdiff::{synthesize, Error};

#[derive(Parser)]
#[command(name = "optdiff", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the optimal process and write its coefficients and checks.
    Optimal {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Points on which `variance.csv` samples σ²/2.
        #[arg(long, default_value_t = 200)]
        grid_points: usize,
    },
    /// Discretize the generator and compare its gap with λ₁.
    Spectrum {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Number of eigenvalues.
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        grid_points: usize,
    },
    /// Euler–Maruyama paths; autocorrelation, histogram and decay rate.
    Simulate {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
        #[arg(long)]
        max_lag: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, value_parser = parse_boundary_mode)]
        boundary_mode: Option<BoundaryMode>,
        /// Starting point (defaults to the stationary mean).
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        /// Worker threads for path-parallel simulation.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Reproduce the Pearson catalog table and verify every row.
    Table {
        /// Extra rows: `{"rows": [{"name": "beta", "params": [2, 3]}]}`.
        #[arg(long)]
        params_file: Option<PathBuf>,
        /// Exit with status 4 when a row fails verification.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        /// `manifest.json` or the directory containing it.
        manifest: PathBuf,
        /// Output directory (defaults to the recorded one).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Average variance σ̂²/2 (defaults to the catalog value).
    #[arg(long)]
    sigma_hat: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_boundary_mode(s: &str) -> Result<BoundaryMode, String> {
    match s {
        "reflect" => Ok(BoundaryMode::Reflect),
        "reject-step" | "reject" => Ok(BoundaryMode::RejectStep),
        _ => Err(format!("unknown boundary mode '{s}' (reflect, reject-step)")),
    }
}

fn load_spec(path: &Path, sigma_hat: Option<f64>) -> optdiff::Result<(SpecFile, f64)> {
    let spec = SpecFile::load(path)?;
    spec.to_spec()?;
    let s = match sigma_hat {
        Some(s) => s,
        None => default_sigma_hat(&spec)?,
    };
    Ok((spec, s))
}

fn run(cli: Cli) -> optdiff::Result<Outcome> {
    match cli.command {
        Command::Optimal {
            spec,
            common,
            grid_points,
        } => {
            let (file, sigma_hat) = load_spec(&spec, common.sigma_hat)?;
            let resolved = Resolved::Optimal {
                spec: file,
                sigma_hat,
                grid_points,
            };
            execute(resolved, Some(&spec), &common.out)
        }
        Command::Spectrum {
            spec,
            common,
            k,
            grid_points,
        } => {
            let (file, sigma_hat) = load_spec(&spec, common.sigma_hat)?;
            let resolved = Resolved::Spectrum {
                spec: file,
                sigma_hat,
                k,
                grid_points,
            };
            execute(resolved, Some(&spec), &common.out)
        }
        Command::Simulate {
            spec,
            common,
            dt,
            steps,
            paths,
            seed,
            burn_in,
            record_every,
            max_lag,
            bins,
            boundary_mode,
            x0,
            threads,
        } => {
            let (file, sigma_hat) = load_spec(&spec, common.sigma_hat)?;
            let section = file.sim.clone().unwrap_or_default();
            let mut config = section.apply(SimConfig::default());
            config.dt = dt.unwrap_or(config.dt);
            config.n_steps = steps.unwrap_or(config.n_steps);
            config.n_paths = paths.unwrap_or(config.n_paths);
            config.seed = seed.unwrap_or(config.seed);
            config.burn_in = burn_in.unwrap_or(config.burn_in);
            config.record_every = record_every.unwrap_or(config.record_every);
            config.max_lag = max_lag.unwrap_or(config.max_lag);
            config.histogram_bins = bins.unwrap_or(config.histogram_bins);
            config.boundary_mode = boundary_mode.unwrap_or(config.boundary_mode);
            config.threads = threads.or(config.threads);
            config.validate()?;
            let x0 = match x0.or(section.x0) {
                Some(x) => x,
                None => synthesize(&file.to_spec()?, sigma_hat)?.moments.m1,
            };
            let resolved = Resolved::Simulate {
                spec: file,
                sigma_hat,
                x0,
                config,
            };
            execute(resolved, Some(&spec), &common.out)
        }
        Command::Table {
            params_file,
            strict,
            out,
        } => {
            let mut rows = default_table_entries();
            if let Some(p) = &params_file {
                rows.extend(load_table_entries(p)?);
            }
            execute(Resolved::Table { rows, strict }, params_file.as_deref(), &out)
        }
        Command::Replay { manifest, out } => {
            let m = RunManifest::load(&manifest)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&m.output_dir));
            execute(m.parameters, m.input.as_deref().map(Path::new), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => {
            eprintln!("error: at least one row failed verification");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}
