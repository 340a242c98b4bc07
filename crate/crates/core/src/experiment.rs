//! Replicated experiments and parameter sweeps.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ams::{run_ams, AmsConfig, KillCount, ParentRule, TieRule};
use crate::baselines::{
    run_antithetic_mc, run_crude_mc, run_mlmc, EstimateResult, McConfig, Method, MlmcConfig,
};
use crate::contracts::ContractSpec;
use crate::error::{Error, Result};
use crate::importance::{ImportanceFamily, ImportanceSpec};
use crate::models::ModelSpec;
use crate::report::ReportRow;
use crate::stats;

/// Estimator and its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MethodConfig {
    Ams {
        n_particles: usize,
        kill: KillCount,
        importance: ImportanceFamily,
        /// Defaults to the importance function's level.
        #[serde(default)]
        l_max: Option<f64>,
        /// Volatility input of the analytic score; defaults from the model.
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        max_iterations: Option<usize>,
        #[serde(default)]
        tie_rule: TieRule,
        #[serde(default)]
        parent_rule: ParentRule,
    },
    #[serde(rename = "mc")]
    CrudeMc { n_paths: u64 },
    #[serde(rename = "mca")]
    AntitheticMc { n_paths: u64 },
    Mlmc(MlmcConfig),
}

impl MethodConfig {
    pub fn ams(n_particles: usize, k: f64, importance: ImportanceFamily) -> Self {
        Self::Ams {
            n_particles,
            kill: KillCount::Fraction(k),
            importance,
            l_max: None,
            sigma: None,
            max_iterations: None,
            tie_rule: TieRule::default(),
            parent_rule: ParentRule::default(),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Self::Ams { .. } => Method::Ams,
            Self::CrudeMc { .. } => Method::CrudeMc,
            Self::AntitheticMc { .. } => Method::AntitheticMc,
            Self::Mlmc(_) => Method::Mlmc,
        }
    }

    /// The AMS configuration for one run.
    pub fn ams_config(&self, model: &ModelSpec, contract: &ContractSpec, seed: u64, run: u64) -> Result<AmsConfig> {
        let Self::Ams {
            n_particles,
            kill,
            importance,
            l_max,
            sigma,
            max_iterations,
            tie_rule,
            parent_rule,
        } = self
        else {
            return Err(Error::Config("not an AMS method".into()));
        };
        let mut spec = ImportanceSpec::for_model(*importance, contract, model)?;
        if let Some(s) = sigma {
            spec = spec.with_sigma(*s)?;
        }
        let mut cfg = AmsConfig::new(*n_particles, *kill, spec).with_stream(seed, run);
        if let Some(l) = l_max {
            cfg.l_max = *l;
        }
        cfg.max_iterations = *max_iterations;
        cfg.tie_rule = *tie_rule;
        cfg.parent_rule = *parent_rule;
        Ok(cfg)
    }

    /// Runs the estimator once on streams keyed by `(seed, run)`.
    pub fn run_once(&self, model: &ModelSpec, contract: &ContractSpec, seed: u64, run: u64) -> Result<EstimateResult> {
        match self {
            Self::Ams { .. } => {
                let cfg = self.ams_config(model, contract, seed, run)?;
                Ok(run_ams(&cfg, model, contract)?.into())
            }
            Self::CrudeMc { n_paths } => run_crude_mc(&McConfig::new(*n_paths, seed, run), model, contract),
            Self::AntitheticMc { n_paths } => {
                run_antithetic_mc(&McConfig::new(*n_paths, seed, run), model, contract)
            }
            Self::Mlmc(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                cfg.run = run;
                run_mlmc(&cfg, model, contract)
            }
        }
    }
}

/// `R = seeds.len() * runs_per_seed` runs; run `t` under seed `s` uses
/// streams keyed by `(s, t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replication {
    pub seeds: Vec<u64>,
    pub runs_per_seed: u64,
}

impl Replication {
    /// `n_seeds` consecutive seeds starting at `first_seed`.
    pub fn new(first_seed: u64, n_seeds: u64, runs_per_seed: u64) -> Self {
        Self {
            seeds: (first_seed..first_seed + n_seeds).collect(),
            runs_per_seed,
        }
    }

    pub fn runs(&self) -> u64 {
        self.seeds.len() as u64 * self.runs_per_seed
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs() < 2 {
            return Err(Error::Config(
                "at least two runs are needed to estimate a variance".into(),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!(
                "seed {dup} is listed twice, which would repeat stream identifiers"
            )));
        }
        Ok(())
    }

    /// `(seed, run)` pairs in execution order.
    pub fn streams(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.seeds
            .iter()
            .flat_map(move |&s| (0..self.runs_per_seed).map(move |t| (s, t)))
    }
}

impl Default for Replication {
    /// Five seeds with ten runs each.
    fn default() -> Self {
        Self::new(1, 5, 10)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub model: ModelSpec,
    pub contract: ContractSpec,
    pub method: MethodConfig,
    pub replication: Replication,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.replication.validate()?;
        self.contract.validate()?;
        self.model.validate()?;
        match &self.method {
            MethodConfig::Ams { .. } => self.method.ams_config(&self.model, &self.contract, 0, 0)?.validate(),
            MethodConfig::CrudeMc { n_paths } if *n_paths == 0 => {
                Err(Error::Config("crude Monte Carlo needs at least one path".into()))
            }
            MethodConfig::AntitheticMc { n_paths } if *n_paths == 0 || n_paths % 2 == 1 => Err(Error::Config(
                format!("antithetic Monte Carlo needs a positive even path count, got {n_paths}"),
            )),
            MethodConfig::Mlmc(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }
}

/// One run of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub run: u64,
    pub outcome: std::result::Result<EstimateResult, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub row: ReportRow,
    pub runs: Vec<RunRecord>,
    /// Work summed over successful runs.
    pub total_work: u64,
    /// Mean undiscounted probability estimate.
    pub mean_p_hat: f64,
}

impl ExperimentOutcome {
    pub fn estimates(&self) -> impl Iterator<Item = &EstimateResult> {
        self.runs.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.estimates().map(|e| e.price).collect()
    }

    pub fn p_hats(&self) -> Vec<f64> {
        self.estimates().map(|e| e.p_hat).collect()
    }
}

/// Runs every replication of `spec` and aggregates the discounted prices.
/// A failing run is recorded and excluded from the statistics.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let start = Instant::now();
    let runs: Vec<RunRecord> = spec
        .replication
        .streams()
        .map(|(seed, run)| {
            let outcome = spec
                .method
                .run_once(&spec.model, &spec.contract, seed, run)
                .map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::warn!("{} seed {seed} run {run} failed: {e}", spec.id);
            }
            RunRecord { seed, run, outcome }
        })
        .collect();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let ok: Vec<&EstimateResult> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let prices: Vec<f64> = ok.iter().map(|e| e.price).collect();
    let total_work: u64 = ok.iter().map(|e| e.work).sum();
    let n = ok.len() as f64;
    let rel_accuracy = match stats::relative_accuracy(&prices) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{}: {e}", spec.id);
            f64::NAN
        }
    };
    let iterations = if spec.method.method() == Method::Ams {
        ok.iter().filter_map(|e| e.iterations).sum::<usize>() as f64 / n
    } else {
        f64::NAN
    };
    let row = ReportRow {
        experiment: spec.id.clone(),
        method: spec.method.method().label().to_string(),
        mean: stats::mean(&prices),
        variance: stats::sample_variance(&prices),
        rel_accuracy,
        work: total_work as f64 / n,
        iterations,
        runs: ok.len() as u64,
        wall_ms,
    };
    Ok(ExperimentOutcome {
        mean_p_hat: stats::mean(&ok.iter().map(|e| e.p_hat).collect::<Vec<_>>()),
        row,
        runs,
        total_work,
    })
}

/// Runs `spec` once per discard fraction; ids get a `/k=<value>` suffix.
pub fn sweep_k(base: &ExperimentSpec, ks: &[f64]) -> Result<Vec<ExperimentOutcome>> {
    ks.iter()
        .map(|&k| {
            let mut spec = base.clone();
            match &mut spec.method {
                MethodConfig::Ams { kill, .. } => *kill = KillCount::Fraction(k),
                _ => return Err(Error::Config("the k sweep needs an AMS method".into())),
            }
            spec.id = format!("{}/k={k}", base.id);
            run_experiment(&spec)
        })
        .collect()
}

/// One row of an `N` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepNRow {
    pub n_particles: usize,
    pub outcome: ExperimentOutcome,
    /// `work / (N log N (-log p))` with the mean probability estimate.
    pub prefactor: f64,
}

/// Runs `spec` once per population size; ids get a `/n=<value>` suffix.
pub fn sweep_n(base: &ExperimentSpec, ns: &[usize]) -> Result<Vec<SweepNRow>> {
    ns.iter()
        .map(|&n| {
            let mut spec = base.clone();
            match &mut spec.method {
                MethodConfig::Ams { n_particles, .. } => *n_particles = n,
                _ => return Err(Error::Config("the N sweep needs an AMS method".into())),
            }
            spec.id = format!("{}/n={n}", base.id);
            let outcome = run_experiment(&spec)?;
            let prefactor = complexity_prefactor(outcome.row.work, n, outcome.mean_p_hat);
            Ok(SweepNRow {
                n_particles: n,
                outcome,
                prefactor,
            })
        })
        .collect()
}

/// `work / (N ln N (-ln p))`.
pub fn complexity_prefactor(work: f64, n: usize, p: f64) -> f64 {
    let n = n as f64;
    work / (n * n.ln() * -p.ln())
}
