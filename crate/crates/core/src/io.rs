//! Distribution spec files (JSON or TOML) and 17-significant-digit CSV
//! output.
//!
//! A spec file names a `kind`, its `params`, an optional `support` whose
//! ends may be the strings `"inf"`/`"-inf"`, and for custom densities an
//! inline `grid`/`pdf` pair:
//!
//! ```toml
//! kind = "beta"
//! params = { alpha = 1.0, beta = 1.0 }
//!
//! [sim]
//! dt = 1e-3
//! steps = 1000000
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::numerics::{Grid, GridKind};
use crate::sim::{BoundaryMode, SimConfig};

/// A support end: a number or `"inf"`, `"-inf"`, `"+inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

impl Bound {
    pub fn value(&self) -> Result<f64> {
        match self {
            Bound::Number(v) => Ok(*v),
            Bound::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad support bound '{s}'"))),
            },
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            Bound::Text("inf".into())
        } else if v == f64::NEG_INFINITY {
            Bound::Text("-inf".into())
        } else {
            Bound::Number(v)
        }
    }
}

/// Optional simulation settings; unset fields keep [`SimConfig`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_mode: Option<BoundaryMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl SimSection {
    /// Overlays the set fields on `base`.
    pub fn apply(&self, mut base: SimConfig) -> SimConfig {
        if let Some(v) = self.dt {
            base.dt = v;
        }
        if let Some(v) = self.steps {
            base.n_steps = v;
        }
        if let Some(v) = self.paths {
            base.n_paths = v;
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        if let Some(v) = self.burn_in {
            base.burn_in = v;
        }
        if let Some(v) = self.record_every {
            base.record_every = v;
        }
        if let Some(v) = self.max_lag {
            base.max_lag = v;
        }
        if let Some(v) = self.bins {
            base.histogram_bins = v;
        }
        if let Some(v) = self.boundary_mode {
            base.boundary_mode = v;
        }
        base
    }
}

/// The on-disk description of a stationary density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[Bound; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdf: Option<Vec<f64>>,
    /// Mixture components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<SpecFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Average variance `σ̂²/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

impl SpecFile {
    /// Parses TOML when `path` ends in `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// A catalog spec with the given parameters.
    pub fn catalog(kind: &str, params: &[(&str, f64)]) -> Self {
        SpecFile {
            kind: kind.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            support: None,
            grid: None,
            pdf: None,
            components: None,
            weights: None,
            sigma_hat: None,
            sim: None,
        }
    }

    /// Builds and validates the density.
    pub fn to_spec(&self) -> Result<DistributionSpec> {
        let kind = self.kind.to_ascii_lowercase().replace(['-', ' '], "_");
        let spec = match kind.as_str() {
            "custom" | "tabulated" => {
                self.expect_params(&[])?;
                let (Some(grid), Some(pdf)) = (&self.grid, &self.pdf) else {
                    return Err(Error::InvalidInput("custom density needs `grid` and `pdf`".into()));
                };
                if grid.len() != pdf.len() {
                    return Err(Error::InvalidInput(format!(
                        "`grid` has {} entries but `pdf` has {}",
                        grid.len(),
                        pdf.len()
                    )));
                }
                DistributionSpec::tabulated(Grid::new(grid.clone(), GridKind::Custom)?, pdf.clone())?
            }
            "mixture" => {
                self.expect_params(&[])?;
                let (Some(parts), Some(weights)) = (&self.components, &self.weights) else {
                    return Err(Error::InvalidInput("mixture needs `components` and `weights`".into()));
                };
                let specs = parts.iter().map(|p| p.to_spec()).collect::<Result<Vec<_>>>()?;
                DistributionSpec::mixture(&specs, weights)?
            }
            _ => {
                let v = self.catalog_params(&kind)?;
                match kind.as_str() {
                    "beta" => DistributionSpec::beta(v[0], v[1]),
                    "jacobi" => DistributionSpec::jacobi(v[0], v[1]),
                    "gamma" | "cir" => DistributionSpec::gamma(v[0]),
                    "normal" | "ou" => DistributionSpec::normal(v[0], v[1]),
                    "student" | "student_cauchy" | "cauchy" => DistributionSpec::student_cauchy(v[0]),
                    "inverse_gamma" | "reciprocal_gamma" => DistributionSpec::inverse_gamma(v[0]),
                    "fisher_snedecor" | "f" => DistributionSpec::fisher_snedecor(v[0], v[1]),
                    "hyperexponential" => DistributionSpec::hyperexponential(v[0], v[1], v[2], v[3]),
                    "exponential" => DistributionSpec::exponential(v[0]),
                    "cubic" | "cubic_pearson" => DistributionSpec::cubic_pearson(v[0], v[1], v[2]),
                    _ => unreachable!(),
                }?
            }
        };
        if let Some([lo, hi]) = &self.support {
            let (lo, hi) = (lo.value()?, hi.value()?);
            let s = spec.support();
            if lo != s.lower || hi != s.upper {
                return Err(Error::InvalidInput(format!(
                    "declared support [{lo}, {hi}] differs from the density's [{}, {}]",
                    s.lower, s.upper
                )));
            }
        }
        Ok(spec)
    }

    fn catalog_params(&self, kind: &str) -> Result<Vec<f64>> {
        let names: &[&str] = match kind {
            "beta" | "jacobi" => &["alpha", "beta"],
            "gamma" | "cir" | "student" | "student_cauchy" | "cauchy" | "inverse_gamma" | "reciprocal_gamma" => {
                &["alpha"]
            }
            "normal" | "ou" => &["x0", "sigma"],
            "fisher_snedecor" | "f" => &["nu1", "nu2"],
            "hyperexponential" => &["p1", "p2", "eta1", "eta2"],
            "exponential" => &["eta"],
            "cubic" | "cubic_pearson" => &["alpha", "beta", "a"],
            _ => return Err(Error::InvalidInput(format!("unknown kind '{}'", self.kind))),
        };
        self.expect_params(names)?;
        Ok(names.iter().map(|n| self.params[*n]).collect())
    }

    fn expect_params(&self, names: &[&str]) -> Result<()> {
        if let Some(extra) = self.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!(
                "unexpected parameter '{extra}' for kind {}",
                self.kind
            )));
        }
        if let Some(missing) = names.iter().find(|n| !self.params.contains_key(**n)) {
            return Err(Error::InvalidInput(format!(
                "missing parameter '{missing}' for kind {}",
                self.kind
            )));
        }
        Ok(())
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("invalid document: {e}")))
}

pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::InvalidInput(format!("invalid document: {e}")))
}

/// Reads `path` as TOML when it ends in `.toml`, JSON otherwise.
pub fn load_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        parse_toml(&text)
    } else {
        parse_json(&text)
    }
}

/// A double in 17 significant digits (lossless).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header line and comma-separated rows of doubles.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| format_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Writes `value` as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}
