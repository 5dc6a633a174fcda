use std::path::{Path, PathBuf};

use serde::Deserialize;
use specshift::opcalc::MatrixJson;
use specshift::{FunctionRef, NormKind, ScalarFunction};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RatioSearch,
    Divergence,
    Commuting,
    Verify,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::RatioSearch => "ratio-search",
            Experiment::Divergence => "divergence",
            Experiment::Commuting => "commuting",
            Experiment::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Spectrum grid: `count` equispaced points of `interval`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub interval: [f64; 2],
    pub count: usize,
}

/// Matrix pair injected into the verify run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "B")]
    pub b: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub function: Option<FunctionRef>,
    pub dims: Option<Vec<usize>>,
    pub grid: Option<GridConfig>,
    pub budget: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub delta0: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    /// Norms searched by ratio-search; both by default.
    pub norm_kinds: Option<Vec<NormKind>>,
    /// Block size for divergence searches.
    pub block_dim: Option<usize>,
    /// Grid size for the commuting witness search.
    pub search_grid: Option<usize>,
    /// Random samples per verify check.
    pub samples: Option<usize>,
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: Option<usize>) -> Result<Option<usize>, CliError> {
    match v {
        Some(0) => Err(bad(format!("{name} must be positive"))),
        v => Ok(v),
    }
}

fn required<T>(name: &str, v: Option<T>, exp: Experiment) -> Result<T, CliError> {
    v.ok_or_else(|| bad(format!("{} requires \"{name}\"", exp.as_str())))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn resolve_function(&self, exp: Experiment) -> Result<ScalarFunction, CliError> {
        let r = required("function", self.function.as_ref(), exp)?;
        r.resolve().map_err(|e| bad(e.to_string()))
    }

    /// Checks positivity and the fields each experiment needs.
    pub fn validate(&self, exp: Experiment) -> Result<(), CliError> {
        if let Some(e) = self.experiment {
            if e != exp {
                return Err(bad(format!("config is for {}, command is {}", e.as_str(), exp.as_str())));
            }
        }
        positive("budget", self.budget)?;
        positive("K", self.k)?;
        positive("block_dim", self.block_dim)?;
        positive("search_grid", self.search_grid)?;
        positive("samples", self.samples)?;
        if let Some(d) = &self.dims {
            if d.is_empty() || d.contains(&0) {
                return Err(bad("dims must be a non-empty list of positive integers"));
            }
        }
        if let Some(d) = self.delta0 {
            if !(d > 0.0 && d.is_finite()) {
                return Err(bad("delta0 must be positive"));
            }
        }
        if let Some(g) = &self.grid {
            let [a, b] = g.interval;
            if !(a < b) || !a.is_finite() || !b.is_finite() || g.count < 2 {
                return Err(bad("grid needs a finite interval [a, b] with a < b and count >= 2"));
            }
        }
        match exp {
            Experiment::RatioSearch => {
                required("dims", self.dims.as_ref(), exp)?;
                required("grid", self.grid.as_ref(), exp)?;
                required("budget", self.budget, exp)?;
                self.resolve_function(exp)?;
            }
            Experiment::Divergence => {
                required("K", self.k, exp)?;
                required("budget", self.budget, exp)?;
                self.resolve_function(exp)?;
            }
            Experiment::Commuting => {
                required("K", self.k, exp)?;
                self.resolve_function(exp)?;
            }
            Experiment::Verify => {
                if self.function.is_some() {
                    self.resolve_function(exp)?;
                }
            }
        }
        Ok(())
    }
}
