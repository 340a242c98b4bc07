//! Turns command-line flags into experiment specifications.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use digisplit::baselines::{MlmcConfig, MlmcSampling};
use digisplit::config::ExperimentFile;
use digisplit::models::HestonScheme;
use digisplit::{presets, ContractKind, ContractSpec, ExperimentSpec, ImportanceFamily, KillCount, MethodConfig, ModelSpec, Payoff, Replication};

use crate::args::{Common, ContractArg, ImportanceArg, MethodArg, ModelArg, SchemeArg};

/// Subcommand defaults for flags the user leaves unset.
#[derive(Clone, Copy, Debug)]
pub struct Preset {
    pub model: ModelArg,
    pub contract: ContractArg,
    pub method: MethodArg,
    pub level: Option<f64>,
    pub n_particles: usize,
    pub steps: Option<usize>,
}

impl Preset {
    pub const PRICE: Self = Self {
        model: ModelArg::Bs,
        contract: ContractArg::DigitalCall,
        method: MethodArg::Ams,
        level: None,
        n_particles: 10_000,
        steps: None,
    };

    pub const EXTREME: Self = Self {
        level: Some(presets::EXTREME_STRIKE),
        n_particles: 50_000,
        steps: Some(presets::STEPS_PER_YEAR),
        ..Self::PRICE
    };

    pub const MULTI_ASSET: Self = Self {
        model: ModelArg::MultiGbm,
        contract: ContractArg::MultiDispersion,
        ..Self::PRICE
    };
}

const DEFAULT_MC_PATHS: usize = 1_000_000;
const DEFAULT_K: f64 = 0.45;
const DEFAULT_MLMC_BASE_STEPS: usize = 4;
const DEFAULT_MLMC_LEVELS: usize = 4;
const DEFAULT_MLMC_TARGET_SE: f64 = 1e-3;

fn contract_kind(c: ContractArg) -> ContractKind {
    match c {
        ContractArg::DigitalCall => ContractKind::DigitalCall,
        ContractArg::DigitalPut => ContractKind::DigitalPut,
        ContractArg::AsianCall => ContractKind::AsianDigitalCall,
        ContractArg::AsianPut => ContractKind::AsianDigitalPut,
        ContractArg::BarrierUpInCall => ContractKind::BarrierUpInCall,
        ContractArg::BarrierUpInPut => ContractKind::BarrierUpInPut,
        ContractArg::MultiDispersion => ContractKind::MultiAssetDispersion,
    }
}

fn importance_family(i: ImportanceArg) -> ImportanceFamily {
    match i {
        ImportanceArg::Path => ImportanceFamily::PathBased,
        ImportanceArg::BsAnalytic => ImportanceFamily::BsAnalytic,
        ImportanceArg::MultiSum => ImportanceFamily::MultiAssetSum,
    }
}

fn model_spec(model: ModelArg, scheme: Option<SchemeArg>) -> Result<ModelSpec> {
    Ok(match model {
        ModelArg::Bs => presets::black_scholes(),
        ModelArg::Heston => presets::heston(match scheme.unwrap_or(SchemeArg::Qe) {
            SchemeArg::Qe => HestonScheme::QuadraticExponential,
            SchemeArg::Euler => HestonScheme::Euler,
            SchemeArg::Milstein => HestonScheme::Milstein,
        }),
        ModelArg::MultiGbm => presets::multi_gbm()?,
    })
}

fn default_level(kind: ContractKind, model: ModelArg) -> f64 {
    match kind {
        ContractKind::MultiAssetDispersion => presets::DISPERSION_THRESHOLD,
        ContractKind::DigitalPut | ContractKind::AsianDigitalPut | ContractKind::BarrierUpInPut => 0.8,
        _ if model == ModelArg::Heston => presets::HESTON_STRIKE,
        _ => 1.2,
    }
}

/// Terminal payoffs under exact stepping need one step; anything else gets
/// the daily grid.
fn default_steps(kind: ContractKind, model: ModelArg, maturity: f64) -> usize {
    let exact = model != ModelArg::Heston;
    let terminal = matches!(
        kind,
        ContractKind::DigitalCall | ContractKind::DigitalPut | ContractKind::MultiAssetDispersion
    );
    if exact && terminal {
        1
    } else {
        ((presets::STEPS_PER_YEAR as f64 * maturity).round() as usize).max(1)
    }
}

fn replication(c: &Common, base: Replication) -> Replication {
    let first = c.seed.or(base.seeds.first().copied()).unwrap_or(1);
    let n_seeds = c.seeds.unwrap_or(base.seeds.len() as u64);
    let runs = c.runs.unwrap_or(base.runs_per_seed);
    if c.seed.is_none() && c.seeds.is_none() {
        Replication {
            seeds: base.seeds,
            runs_per_seed: runs,
        }
    } else {
        Replication::new(first, n_seeds, runs)
    }
}

/// Builds a single experiment from flags and a preset.
pub fn from_flags(c: &Common, preset: Preset) -> Result<ExperimentSpec> {
    let model_arg = c.model.unwrap_or(preset.model);
    let contract_arg = c.contract.unwrap_or(if model_arg == ModelArg::MultiGbm {
        ContractArg::MultiDispersion
    } else {
        preset.contract
    });
    let kind = contract_kind(contract_arg);
    let model = model_spec(model_arg, c.scheme)?;
    let level = match kind {
        ContractKind::BarrierUpInCall | ContractKind::BarrierUpInPut => c.barrier.or(c.strike),
        _ => c.strike,
    }
    .or(preset.level)
    .unwrap_or_else(|| default_level(kind, model_arg));
    let payoff = Payoff::from_kind(kind, level, Some(c.average_level.unwrap_or(presets::DISPERSION_AVERAGE)))?;
    let maturity = c.maturity.unwrap_or(presets::MATURITY);
    let method_arg = c.method.unwrap_or(preset.method);
    let steps = if method_arg == MethodArg::Mlmc {
        // The finest MLMC grid is set by the level count.
        DEFAULT_MLMC_BASE_STEPS
    } else {
        c.steps
            .or(preset.steps)
            .unwrap_or_else(|| default_steps(kind, model_arg, maturity))
    };
    let contract = ContractSpec::new(payoff, maturity, steps)?;

    let method = match method_arg {
        MethodArg::Ams => {
            let family = c.importance.map(importance_family).unwrap_or(if kind.is_multi_asset() {
                ImportanceFamily::MultiAssetSum
            } else {
                ImportanceFamily::PathBased
            });
            let mut m = MethodConfig::ams(c.n.unwrap_or(preset.n_particles), c.k.unwrap_or(DEFAULT_K), family);
            if let MethodConfig::Ams { l_max, .. } = &mut m {
                *l_max = c.lmax;
            }
            m
        }
        MethodArg::Mc => MethodConfig::CrudeMc {
            n_paths: c.n.unwrap_or(DEFAULT_MC_PATHS) as u64,
        },
        MethodArg::Mca => MethodConfig::AntitheticMc {
            n_paths: c.n.unwrap_or(DEFAULT_MC_PATHS) as u64,
        },
        MethodArg::Mlmc => MethodConfig::Mlmc(MlmcConfig::new(
            c.steps.unwrap_or(DEFAULT_MLMC_BASE_STEPS),
            c.levels.unwrap_or(DEFAULT_MLMC_LEVELS),
            MlmcSampling::TargetStdError(c.target_se.unwrap_or(DEFAULT_MLMC_TARGET_SE)),
        )),
    };
    let id = format!(
        "{}-{}-{}",
        model.name(),
        contract_arg.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(),
        method.method().label()
    );
    let spec = ExperimentSpec {
        id,
        model,
        contract,
        method,
        replication: replication(c, Replication::default()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Applies command-line overrides to an experiment read from a file.
pub fn apply_overrides(mut spec: ExperimentSpec, c: &Common) -> Result<ExperimentSpec> {
    if let Some(steps) = c.steps {
        match &mut spec.method {
            MethodConfig::Mlmc(cfg) => cfg.base_steps = steps,
            _ => spec.contract = spec.contract.with_steps(steps)?,
        }
    }
    match &mut spec.method {
        MethodConfig::Ams {
            n_particles,
            kill,
            importance,
            l_max,
            ..
        } => {
            if let Some(n) = c.n {
                *n_particles = n;
            }
            if let Some(k) = c.k {
                *kill = KillCount::Fraction(k);
            }
            if let Some(i) = c.importance {
                *importance = importance_family(i);
            }
            if c.lmax.is_some() {
                *l_max = c.lmax;
            }
        }
        MethodConfig::CrudeMc { n_paths } | MethodConfig::AntitheticMc { n_paths } => {
            if let Some(n) = c.n {
                *n_paths = n as u64;
            }
        }
        MethodConfig::Mlmc(cfg) => {
            if let Some(l) = c.levels {
                cfg.max_level = l;
            }
            if let Some(se) = c.target_se {
                cfg.sampling = MlmcSampling::TargetStdError(se);
            }
        }
    }
    spec.replication = replication(c, spec.replication);
    spec.validate()
        .with_context(|| format!("experiment '{}' after command-line overrides", spec.id))?;
    Ok(spec)
}

/// Experiments from `--spec` (with overrides) or from flags alone.
pub fn experiments(c: &Common, preset: Preset) -> Result<(Vec<ExperimentSpec>, Option<ExperimentFile>)> {
    match &c.spec {
        Some(path) => {
            let file = ExperimentFile::load(path).with_context(|| format!("reading {}", path.display()))?;
            let specs = file
                .specs()?
                .into_iter()
                .map(|s| apply_overrides(s, c))
                .collect::<Result<Vec<_>>>()?;
            Ok((specs, Some(file)))
        }
        None => Ok((vec![from_flags(c, preset)?], None)),
    }
}

pub fn require_ams(spec: &ExperimentSpec) -> Result<()> {
    if !matches!(spec.method, MethodConfig::Ams { .. }) {
        bail!("experiment '{}' is not an AMS experiment", spec.id);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_fill_unset_flags() {
        let spec = from_flags(&Common::default(), Preset::EXTREME).unwrap();
        assert_eq!(spec.contract.payoff, Payoff::DigitalCall { strike: 3.5 });
        assert_eq!(spec.contract.steps, 250);
        assert_eq!(spec.replication.runs(), 50);
        match spec.method {
            MethodConfig::Ams { n_particles, kill, .. } => {
                assert_eq!(n_particles, 50_000);
                assert_eq!(kill, KillCount::Fraction(0.45));
            }
            m => panic!("{m:?}"),
        }
        let multi = from_flags(&Common::default(), Preset::MULTI_ASSET).unwrap();
        assert_eq!(multi.model.assets(), 3);
        assert_eq!(multi.contract.steps, 1);
    }

    #[test]
    fn flags_override_presets() {
        let c = Common {
            model: Some(ModelArg::Heston),
            contract: Some(ContractArg::BarrierUpInCall),
            barrier: Some(1.6),
            method: Some(MethodArg::Mc),
            n: Some(1000),
            seeds: Some(2),
            runs: Some(3),
            ..Default::default()
        };
        let spec = from_flags(&c, Preset::PRICE).unwrap();
        assert_eq!(spec.contract.payoff, Payoff::BarrierUpInCall { barrier: 1.6 });
        assert_eq!(spec.method, MethodConfig::CrudeMc { n_paths: 1000 });
        assert_eq!(spec.replication.runs(), 6);
        assert_eq!(spec.id, "heston-barrier-up-in-call-mc");
    }

    #[test]
    fn invalid_flags_are_rejected() {
        let c = Common {
            k: Some(1.5),
            ..Default::default()
        };
        assert!(from_flags(&c, Preset::PRICE).is_err());
        let c = Common {
            importance: Some(ImportanceArg::MultiSum),
            ..Default::default()
        };
        assert!(from_flags(&c, Preset::PRICE).is_err());
    }
}
