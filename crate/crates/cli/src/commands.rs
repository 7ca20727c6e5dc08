//! Command implementations. Every command is fully described by a
//! [`Resolved`] value, which is what the run manifest records and what
//! `replay` re-executes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use optdiff::io::{format_f64, load_document, write_csv, write_json, write_text, SpecFile};
use optdiff::numerics::Grid;
use optdiff::optimal::{
    canonical_half_variance, check_variance_mean, check_variance_positivity, verify_detailed_balance,
    LinearFunction,
};
use optdiff::pearson::{check_row, row as pearson_row, RowName, RowReport};
use optdiff::sim::{fit_autocorrelation, simulate, SimConfig};
use optdiff::spectral::{process_spectrum, spectral_box};
use optdiff::{synthesize, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A catalog row request for `table`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub params: Vec<f64>,
}

/// The fully resolved inputs of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolved {
    Optimal {
        spec: SpecFile,
        sigma_hat: f64,
        grid_points: usize,
    },
    Spectrum {
        spec: SpecFile,
        sigma_hat: f64,
        k: usize,
        grid_points: usize,
    },
    Simulate {
        spec: SpecFile,
        sigma_hat: f64,
        x0: f64,
        config: SimConfig,
    },
    Table {
        rows: Vec<TableEntry>,
        strict: bool,
    },
}

impl Resolved {
    pub fn command(&self) -> &'static str {
        match self {
            Resolved::Optimal { .. } => "optimal",
            Resolved::Spectrum { .. } => "spectrum",
            Resolved::Simulate { .. } => "simulate",
            Resolved::Table { .. } => "table",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Resolved::Simulate { config, .. } => Some(config.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input: Option<String>,
    pub output_dir: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub parameters: Resolved,
}

impl RunManifest {
    pub fn new(parameters: Resolved, input: Option<&Path>, out: &Path) -> Self {
        RunManifest {
            command: parameters.command().to_string(),
            input: input.map(|p| p.display().to_string()),
            output_dir: out.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: parameters.seed(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            parameters,
        }
    }

    /// Reads a manifest file, or `manifest.json` inside a directory.
    pub fn load(path: &Path) -> Result<Self> {
        let path: PathBuf = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("invalid manifest: {e}")))
    }
}

/// How a run ended, beyond success or error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerificationFailed,
}

/// The `σ̂²/2` that reproduces the catalog's printed variance function.
pub fn default_sigma_hat(spec: &SpecFile) -> Result<f64> {
    if let Some(s) = spec.sigma_hat {
        return Ok(s);
    }
    match canonical_half_variance(&spec.to_spec()?)? {
        Some((_, mean)) => Ok(mean),
        None => Err(Error::InvalidInput(format!(
            "kind '{}' has no catalog variance; pass --sigma-hat",
            spec.kind
        ))),
    }
}

/// Creates `out`, writes the manifest, then runs the command.
pub fn execute(parameters: Resolved, input: Option<&Path>, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out.display())))?;
    let manifest = RunManifest::new(parameters, input, out);
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    match &manifest.parameters {
        Resolved::Optimal {
            spec,
            sigma_hat,
            grid_points,
        } => run_optimal(spec, *sigma_hat, *grid_points, out),
        Resolved::Spectrum {
            spec,
            sigma_hat,
            k,
            grid_points,
        } => run_spectrum(spec, *sigma_hat, *k, *grid_points, out),
        Resolved::Simulate {
            spec,
            sigma_hat,
            x0,
            config,
        } => run_simulate(spec, *sigma_hat, *x0, config, out),
        Resolved::Table { rows, strict } => run_table(rows, *strict, out),
    }
}

fn check_sigma_hat(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("sigma-hat must be positive, got {s}")))
    }
}

#[derive(Serialize)]
struct ProcessSummary {
    kind: String,
    params: BTreeMap<String, f64>,
    lambda1: f64,
    tau: f64,
    phi1: LinearFunction,
    drift: LinearFunction,
    sigma_hat_sq_half: f64,
    m1: f64,
    variance: f64,
    /// Coefficients of `σ²/2` in ascending powers, when polynomial.
    variance_polynomial: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Checks {
    detailed_balance_residual: f64,
    variance_positive: bool,
    variance_min: f64,
    variance_argmin: f64,
    variance_integral: f64,
    variance_integral_error: f64,
}

fn run_optimal(file: &SpecFile, sigma_hat: f64, grid_points: usize, out: &Path) -> Result<Outcome> {
    check_sigma_hat(sigma_hat)?;
    if grid_points < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 grid points, got {grid_points}")));
    }
    let spec = file.to_spec()?;
    let process = synthesize(&spec, sigma_hat)?;
    let summary = ProcessSummary {
        kind: spec.name().to_string(),
        params: spec.params().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        lambda1: process.lambda1,
        tau: process.tau,
        phi1: process.phi1,
        drift: process.drift,
        sigma_hat_sq_half: process.sigma_hat_sq_half,
        m1: process.moments.m1,
        variance: process.moments.variance,
        variance_polynomial: process.variance_polynomial().map(|c| c.to_vec()),
    };
    write_json(&out.join("process.json"), &summary)?;

    let (lo, hi) = spectral_box(&spec)?;
    let grid = Grid::cell_centered(lo, hi, grid_points)?;
    let variance = process.variance_on(&grid)?;
    write_csv(
        &out.join("variance.csv"),
        &["x", "half_variance"],
        grid.points().iter().zip(&variance).map(|(&x, &v)| [x, v]),
    )?;

    let h = 1e-2 * grid.spacing().min(spec.scale());
    let positivity = check_variance_positivity(&process, grid_points.max(10))?;
    let integral = check_variance_mean(&process)?;
    let checks = Checks {
        detailed_balance_residual: verify_detailed_balance(&process, &grid, h),
        variance_positive: positivity.positive,
        variance_min: positivity.min_value,
        variance_argmin: positivity.argmin,
        variance_integral: integral,
        variance_integral_error: (integral - sigma_hat).abs(),
    };
    write_json(&out.join("checks.json"), &checks)?;
    println!("lambda1 = {}, tau = {}", process.lambda1, process.tau);
    Ok(Outcome::Ok)
}

fn run_spectrum(file: &SpecFile, sigma_hat: f64, k: usize, grid_points: usize, out: &Path) -> Result<Outcome> {
    check_sigma_hat(sigma_hat)?;
    if k > grid_points {
        return Err(Error::InvalidInput(format!(
            "cannot compute {k} eigenvalues on {grid_points} grid points"
        )));
    }
    let spec = file.to_spec()?;
    let process = synthesize(&spec, sigma_hat)?;
    let result = process_spectrum(&process, grid_points, k)?;
    write_csv(
        &out.join("spectrum.csv"),
        &["n", "lambda"],
        result.eigenvalues.iter().enumerate().map(|(n, &l)| [n as f64, l]),
    )?;
    let analytic = process.lambda1;
    let numeric = result.gap();
    let rel_err = (numeric - analytic).abs() / analytic;
    let header = "lambda1_analytic,lambda1_numeric,rel_err";
    let line = [analytic, numeric, rel_err].map(format_f64).join(",");
    write_text(&out.join("comparison.csv"), &format!("{header}\n{line}\n"))?;
    println!("{header}\n{line}");
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct RateSummary {
    rate: Option<f64>,
    stderr: Option<f64>,
    fit_window: Option<(f64, f64)>,
    fit_error: Option<String>,
    lambda1_analytic: f64,
    m1_hat: f64,
    m2_hat: f64,
    m1_stderr: f64,
    n_samples: usize,
}

fn run_simulate(file: &SpecFile, sigma_hat: f64, x0: f64, cfg: &SimConfig, out: &Path) -> Result<Outcome> {
    check_sigma_hat(sigma_hat)?;
    let spec = file.to_spec()?;
    let process = synthesize(&spec, sigma_hat)?;
    let stats = simulate(&process, cfg, x0)?;
    write_csv(
        &out.join("autocorr.csv"),
        &["lag", "autocorr"],
        stats.autocorr_rows().map(|(s, c)| [s, c]),
    )?;
    write_csv(
        &out.join("hist.csv"),
        &["bin_lo", "bin_hi", "freq"],
        stats.histogram.rows().map(|(a, b, f)| [a, b, f]),
    )?;
    let fit = fit_autocorrelation(&stats);
    let summary = RateSummary {
        rate: fit.as_ref().ok().map(|r| r.rate),
        stderr: fit.as_ref().ok().map(|r| r.stderr),
        fit_window: fit.as_ref().ok().map(|r| r.fit_window),
        fit_error: fit.as_ref().err().map(|e| e.to_string()),
        lambda1_analytic: process.lambda1,
        m1_hat: stats.m1_hat,
        m2_hat: stats.m2_hat,
        m1_stderr: stats.m1_stderr,
        n_samples: stats.n_samples,
    };
    write_json(&out.join("rate.json"), &summary)?;
    match &fit {
        Ok(r) => println!("rate = {} ± {} (lambda1 = {})", r.rate, r.stderr, process.lambda1),
        Err(e) => eprintln!("warning: no rate fitted: {e}"),
    }
    Ok(Outcome::Ok)
}

/// The seven catalog rows at their default parameters.
pub fn default_table_entries() -> Vec<TableEntry> {
    RowName::ALL
        .iter()
        .map(|n| TableEntry {
            name: n.as_str().to_string(),
            params: n.default_params().to_vec(),
        })
        .collect()
}

/// Extra rows for `table`: `{"rows": [{"name": "beta", "params": [2, 3]}]}`
/// in JSON or TOML.
pub fn load_table_entries(path: &Path) -> Result<Vec<TableEntry>> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ParamsFile {
        rows: Vec<TableEntry>,
    }
    let rows = load_document::<ParamsFile>(path)?.rows;
    for r in &rows {
        r.name.parse::<RowName>()?;
    }
    Ok(rows)
}

fn run_table(entries: &[TableEntry], strict: bool, out: &Path) -> Result<Outcome> {
    let mut lines = vec!["name,params,m1,var,lambda1,sigma_hat_sq_half,verified".to_string()];
    let mut reports: Vec<RowReport> = Vec::new();
    let mut all_verified = true;
    for entry in entries {
        let row = pearson_row(entry.name.parse()?, &entry.params)?;
        let report = check_row(&row)?;
        all_verified &= report.passed;
        let params: Vec<String> = row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        lines.push(format!(
            "{},{},{},{},{},{},{}",
            row.name,
            params.join(";"),
            format_f64(report.m1),
            format_f64(report.var),
            format_f64(report.lambda1),
            format_f64(report.sigma_hat_sq_half),
            report.passed
        ));
        println!("{:<40} verified={}", row.label(), report.passed);
        reports.push(report);
    }
    write_text(&out.join("table1.csv"), &(lines.join("\n") + "\n"))?;
    write_json(&out.join("table1.json"), &reports)?;
    if strict && !all_verified {
        Ok(Outcome::VerificationFailed)
    } else {
        Ok(Outcome::Ok)
    }
}
