use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gaussian,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Log,
}

/// Prediction grid; `bbox = None` means the site bounding box grown by 5%
/// on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: Option<[f64; 4]>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: 50,
            ny: 50,
            bbox: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: Model,
    pub data: PathBuf,
    pub value_col: String,
    pub transform: Transform,
    pub a0: f64,
    pub b0: f64,
    /// Registry spec, e.g. `pareto` or `exponential:0.5`.
    pub eta_prior: String,
    /// Independent joint draws (Gaussian model).
    pub draws: usize,
    /// Chain length including burn-in (binomial model).
    pub iterations: usize,
    /// Defaults to 10% of `iterations`.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub grid: GridSpec,
    pub out: PathBuf,
    pub jitter: Option<f64>,
    pub schemes: Vec<String>,
}

impl RunConfig {
    pub fn gaussian(data: impl Into<PathBuf>, value_col: &str, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            model: Model::Gaussian,
            data: data.into(),
            value_col: value_col.to_string(),
            transform: Transform::None,
            a0: tps_core::posterior::DEFAULT_A0,
            b0: tps_core::posterior::DEFAULT_B0,
            eta_prior: "pareto".into(),
            draws: 10_000,
            iterations: 20_000,
            burn_in: None,
            seed: 1,
            grid: GridSpec::default(),
            out: out.into(),
            jitter: None,
            schemes: vec!["direct".into(), "gibbs".into()],
        }
    }

    pub fn binomial(data: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            model: Model::Binomial,
            ..Self::gaussian(data, "", out)
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 10)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.a0 >= 0.0 && self.a0.is_finite()) || !(self.b0 >= 0.0 && self.b0.is_finite()) {
            return bad(format!("a0 = {}, b0 = {} must be >= 0", self.a0, self.b0));
        }
        if self.grid.nx < 2 || self.grid.ny < 2 {
            return bad(format!("grid {}x{} needs at least 2 points per axis", self.grid.nx, self.grid.ny));
        }
        if let Some([x0, x1, y0, y1]) = self.grid.bbox {
            if !(x1 > x0 && y1 > y0) {
                return bad(format!("empty bounding box [{x0}, {x1}] x [{y0}, {y1}]"));
            }
        }
        if let Some(j) = self.jitter {
            if !(j > 0.0 && j.is_finite()) {
                return bad(format!("jitter {j} must be positive"));
            }
        }
        match self.model {
            Model::Gaussian => {
                if self.draws == 0 {
                    return bad("draws must be positive".into());
                }
                if self.value_col.is_empty() {
                    return bad("no value column given".into());
                }
            }
            Model::Binomial => {
                if self.iterations <= self.burn_in() {
                    return bad(format!(
                        "iterations {} must exceed burn-in {}",
                        self.iterations,
                        self.burn_in()
                    ));
                }
                if self.schemes.is_empty() {
                    return bad("no chain schemes selected".into());
                }
            }
        }
        Ok(())
    }
}
