//! TOML experiment descriptions.
//!
//! ```toml
//! [[experiment]]
//! id = "bs-extreme"
//! model = { kind = "bs", r = 0.03, sigma = 0.2, s0 = 1.0 }
//! contract = { kind = "digital-call", strike = 3.5, maturity = 1.0, steps = 250 }
//! method = { kind = "ams", n_particles = 50000, kill = { fraction = 0.45 }, importance = "path-based" }
//! replication = { seeds = [1, 2, 3, 4, 5], runs_per_seed = 10 }
//!
//! [output]
//! path = "report.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contracts::{ContractSpec, Payoff};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, MethodConfig, Replication};
use crate::models::{BsParams, HestonParams, HestonScheme, ModelSpec, MultiGbmParams};
use crate::report::ReportFormat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Bs {
        r: f64,
        sigma: f64,
        s0: f64,
    },
    Heston {
        r: f64,
        kappa: f64,
        theta: f64,
        vol_of_vol: f64,
        rho: f64,
        v0: f64,
        s0: f64,
        #[serde(default)]
        scheme: HestonScheme,
    },
    /// Either a full `corr` matrix or a common pairwise `rho`.
    MultiGbm {
        r: f64,
        sigma: Vec<f64>,
        s0: Vec<f64>,
        #[serde(default)]
        corr: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        rho: Option<f64>,
    },
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let spec = match self {
            Self::Bs { r, sigma, s0 } => ModelSpec::BlackScholes(BsParams::new(*r, *sigma, *s0)?),
            Self::Heston {
                r,
                kappa,
                theta,
                vol_of_vol,
                rho,
                v0,
                s0,
                scheme,
            } => ModelSpec::Heston {
                params: HestonParams {
                    r: *r,
                    kappa: *kappa,
                    theta: *theta,
                    vol_of_vol: *vol_of_vol,
                    rho: *rho,
                    v0: *v0,
                    s0: *s0,
                },
                scheme: *scheme,
            },
            Self::MultiGbm {
                r,
                sigma,
                s0,
                corr,
                rho,
            } => {
                let corr = match (corr, rho) {
                    (Some(c), None) => c.clone(),
                    (None, Some(rho)) => {
                        MultiGbmParams::uniform(s0.len(), *r, 0.0, 1.0, *rho).corr
                    }
                    _ => {
                        return Err(Error::Config(
                            "multi-gbm needs exactly one of `corr` or `rho`".into(),
                        ))
                    }
                };
                ModelSpec::multi_gbm(MultiGbmParams {
                    r: *r,
                    sigma: sigma.clone(),
                    s0: s0.clone(),
                    corr,
                })?
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractConfig {
    #[serde(flatten)]
    pub payoff: Payoff,
    pub maturity: f64,
    pub steps: usize,
}

impl ContractConfig {
    pub fn to_spec(&self) -> Result<ContractSpec> {
        ContractSpec::new(self.payoff, self.maturity, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub model: ModelConfig,
    pub contract: ContractConfig,
    pub method: MethodConfig,
    #[serde(default)]
    pub replication: Replication,
}

impl ExperimentConfig {
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let spec = ExperimentSpec {
            id: self.id.clone(),
            model: self.model.to_spec()?,
            contract: self.contract.to_spec()?,
            method: self.method.clone(),
            replication: self.replication.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: ReportFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text)?;
        if file.experiments.is_empty() {
            return Err(Error::Config("no [[experiment]] entries".into()));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Validated experiment specifications in file order.
    pub fn specs(&self) -> Result<Vec<ExperimentSpec>> {
        self.experiments
            .iter()
            .map(|e| {
                e.to_spec()
                    .map_err(|err| Error::Config(format!("experiment '{}': {err}", e.id)))
            })
            .collect()
    }
}
