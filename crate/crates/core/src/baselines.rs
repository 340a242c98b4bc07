//! Reference estimators: crude Monte Carlo, antithetic variates and
//! multilevel Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::ams::{AmsResult, Termination};
use crate::contracts::ContractSpec;
use crate::error::{Error, Result};
use crate::models::simulator::{Recorder, Replay};
use crate::models::{DrawKind, ModelSpec, Simulator, TimeGrid, Trajectory};
use crate::rng::{RngStream, StreamId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ams,
    CrudeMc,
    AntitheticMc,
    Mlmc,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ams => "ams",
            Self::CrudeMc => "mc",
            Self::AntitheticMc => "mca",
            Self::Mlmc => "mlmc",
        }
    }
}

/// Outcome of one estimator run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub method: Method,
    pub p_hat: f64,
    /// Discounted value `exp(-rT) * p_hat`.
    pub price: f64,
    /// Within-run standard error of `p_hat`, when the method provides one.
    pub std_error: Option<f64>,
    /// Simulated single-asset steps.
    pub work: u64,
    /// Paths (or particles) simulated from scratch.
    pub samples: u64,
    pub iterations: Option<usize>,
    pub final_weight: Option<f64>,
    pub termination: Option<Termination>,
    pub mlmc_levels: Vec<MlmcLevel>,
}

impl EstimateResult {
    fn plain(method: Method, p_hat: f64, discount: f64, std_error: f64, work: u64, samples: u64) -> Self {
        Self {
            method,
            p_hat,
            price: discount * p_hat,
            std_error: Some(std_error),
            work,
            samples,
            iterations: None,
            final_weight: None,
            termination: None,
            mlmc_levels: Vec::new(),
        }
    }
}

impl From<AmsResult> for EstimateResult {
    fn from(r: AmsResult) -> Self {
        Self {
            method: Method::Ams,
            p_hat: r.p_hat,
            price: r.price,
            std_error: None,
            work: r.work,
            samples: r.n_particles as u64,
            iterations: Some(r.q_iterations),
            final_weight: Some(r.final_weight),
            termination: Some(r.termination),
            mlmc_levels: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub run: u64,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64, run: u64) -> Self {
        Self { n_paths, seed, run }
    }
}

fn setup(model: &ModelSpec, contract: &ContractSpec) -> Result<(Simulator, f64)> {
    contract.validate()?;
    if contract.kind().is_multi_asset() != (model.assets() > 1) {
        return Err(Error::Incompatible(format!(
            "{:?} contract cannot be priced under the {} model",
            contract.kind(),
            model.name()
        )));
    }
    let sim = Simulator::new(model, contract.grid()?)?;
    Ok((sim, (-model.rate() * contract.maturity).exp()))
}

/// Fraction of exercised paths. Path `i` uses stream `(seed, run, i, 0)`.
pub fn run_crude_mc(cfg: &McConfig, model: &ModelSpec, contract: &ContractSpec) -> Result<EstimateResult> {
    if cfg.n_paths == 0 {
        return Err(Error::Config("crude Monte Carlo needs at least one path".into()));
    }
    let (sim, discount) = setup(model, contract)?;
    let mut traj = sim.initial_trajectory();
    let mut work = 0;
    let mut hits = 0u64;
    for i in 0..cfg.n_paths {
        let mut rng = RngStream::new(StreamId::new(cfg.seed, cfg.run, i, 0));
        work += sim.simulate_into(&mut traj, &mut rng);
        hits += contract.payoff.exercised(&traj) as u64;
    }
    let n = cfg.n_paths as f64;
    let p = hits as f64 / n;
    let se = if cfg.n_paths > 1 {
        (p * (1.0 - p) / (n - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimateResult::plain(Method::CrudeMc, p, discount, se, work, cfg.n_paths))
}

/// Paths in pairs driven by mirrored streams: Gaussians negated and
/// uniforms reflected. The standard error comes from the pair means.
pub fn run_antithetic_mc(cfg: &McConfig, model: &ModelSpec, contract: &ContractSpec) -> Result<EstimateResult> {
    if cfg.n_paths == 0 || cfg.n_paths % 2 == 1 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: cfg.n_paths as f64,
            reason: "antithetic sampling needs a positive even path count",
        });
    }
    let (sim, discount) = setup(model, contract)?;
    let mut traj = sim.initial_trajectory();
    let pairs = cfg.n_paths / 2;
    let mut work = 0;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..pairs {
        let id = StreamId::new(cfg.seed, cfg.run, i, 0);
        work += sim.simulate_into(&mut traj, &mut RngStream::new(id));
        let a = contract.payoff.exercised(&traj) as u8 as f64;
        work += sim.simulate_into(&mut traj, &mut RngStream::antithetic(id));
        let b = contract.payoff.exercised(&traj) as u8 as f64;
        let y = 0.5 * (a + b);
        sum += y;
        sum_sq += y * y;
    }
    let n = pairs as f64;
    let mean = sum / n;
    let se = if pairs > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimateResult::plain(Method::AntitheticMc, mean, discount, se, work, cfg.n_paths))
}

/// Paths needed by crude Monte Carlo for relative accuracy `eps_rel` at
/// probability `p`: `ceil((1 - p) / (eps_rel^2 p))`.
pub fn required_mc_samples(p: f64, eps_rel: f64) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "probability must lie in (0, 1)",
        });
    }
    crate::error::ensure_positive("eps_rel", eps_rel)?;
    Ok(((1.0 - p) / (eps_rel * eps_rel * p)).ceil() as u64)
}

/// Per-level sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MlmcSampling {
    /// Samples per level, coarsest first.
    Fixed(Vec<u64>),
    /// Allocation `N_l = eps^-2 sqrt(V_l / C_l) sum_k sqrt(V_k C_k)` from pilot
    /// variances, giving an estimator standard error of about `eps`.
    TargetStdError(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlmcConfig {
    /// Steps on the coarsest grid.
    pub base_steps: usize,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    /// Finest level index; levels are `0..=max_level`.
    pub max_level: usize,
    pub sampling: MlmcSampling,
    #[serde(default = "default_pilot")]
    pub pilot_samples: u64,
    /// Drive the coarse path of each level difference with the fine path's
    /// aggregated draws. Disabling it makes the two paths independent.
    #[serde(default = "default_coupled")]
    pub coupled: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub run: u64,
}

fn default_refinement() -> usize {
    2
}
fn default_pilot() -> u64 {
    1000
}
fn default_coupled() -> bool {
    true
}

impl MlmcConfig {
    pub fn new(base_steps: usize, max_level: usize, sampling: MlmcSampling) -> Self {
        Self {
            base_steps,
            refinement: default_refinement(),
            max_level,
            sampling,
            pilot_samples: default_pilot(),
            coupled: default_coupled(),
            seed: 0,
            run: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_steps == 0 || self.refinement < 2 || self.pilot_samples < 2 {
            return Err(Error::Config(
                "MLMC needs base_steps >= 1, refinement >= 2 and at least two pilot samples".into(),
            ));
        }
        if let MlmcSampling::Fixed(n) = &self.sampling {
            if n.len() != self.max_level + 1 || n.iter().any(|&x| x == 0) {
                return Err(Error::Config(format!(
                    "fixed MLMC sampling needs {} positive sample counts",
                    self.max_level + 1
                )));
            }
        }
        if let MlmcSampling::TargetStdError(eps) = self.sampling {
            crate::error::ensure_positive("target std error", eps)?;
        }
        Ok(())
    }

    pub fn steps_at(&self, level: usize) -> usize {
        self.base_steps * self.refinement.pow(level as u32)
    }
}

/// Diagnostics of one MLMC level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MlmcLevel {
    pub steps: usize,
    pub samples: u64,
    /// Mean of `P_l - P_{l-1}` (of `P_0` on level 0).
    pub mean: f64,
    pub variance: f64,
    pub work: u64,
}

struct LevelSampler {
    fine: Simulator,
    coarse: Option<Simulator>,
    fine_traj: Trajectory,
    coarse_traj: Option<Trajectory>,
    fine_contract: ContractSpec,
    coarse_contract: Option<ContractSpec>,
    kinds: Vec<DrawKind>,
    refinement: usize,
    coupled: bool,
    draws: Vec<f64>,
}

impl LevelSampler {
    fn new(cfg: &MlmcConfig, level: usize, model: &ModelSpec, contract: &ContractSpec) -> Result<Self> {
        let fine_contract = contract.with_steps(cfg.steps_at(level))?;
        let fine = Simulator::new(model, TimeGrid::new(contract.maturity, fine_contract.steps)?)?;
        let (coarse, coarse_contract) = if level > 0 {
            let c = contract.with_steps(cfg.steps_at(level - 1))?;
            (
                Some(Simulator::new(model, TimeGrid::new(contract.maturity, c.steps)?)?),
                Some(c),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            kinds: fine.draw_kinds(),
            fine_traj: fine.initial_trajectory(),
            coarse_traj: coarse.as_ref().map(|s| s.initial_trajectory()),
            fine,
            coarse,
            fine_contract,
            coarse_contract,
            refinement: cfg.refinement,
            coupled: cfg.coupled,
            draws: Vec::new(),
        })
    }

    /// One sample of `P_l - P_{l-1}`; returns (value, work).
    fn sample(&mut self, seed: u64, run: u64, replica: u64) -> (f64, u64) {
        let mut rng = RngStream::new(StreamId::new(seed, run, replica, 0));
        let (Some(coarse), Some(coarse_traj), Some(coarse_contract)) =
            (&self.coarse, &mut self.coarse_traj, &self.coarse_contract)
        else {
            let work = self.fine.advance(&mut self.fine_traj, 0, &mut rng);
            return (self.fine_contract.payoff.exercised(&self.fine_traj) as u8 as f64, work);
        };
        let dim = self.kinds.len();
        let steps = self.fine_contract.steps;
        let mut recorder = Recorder::new(&mut rng, steps * dim);
        let mut work = self.fine.advance(&mut self.fine_traj, 0, &mut recorder);
        let fine_draws = recorder.draws;
        let fine_value = self.fine_contract.payoff.exercised(&self.fine_traj) as u8 as f64;
        if self.coupled {
            coarsen(&fine_draws, &self.kinds, self.refinement, &mut self.draws);
            work += coarse.advance(coarse_traj, 0, &mut Replay::new(&self.draws));
        } else {
            let mut other = RngStream::new(StreamId::new(seed, run, replica, 1));
            work += coarse.advance(coarse_traj, 0, &mut other);
        }
        let coarse_value = coarse_contract.payoff.exercised(coarse_traj) as u8 as f64;
        (fine_value - coarse_value, work)
    }
}

/// Aggregates `refinement` consecutive fine steps into one coarse step:
/// Gaussians are summed and rescaled to unit variance, uniforms are taken
/// from the first fine step of the block.
fn coarsen(fine: &[f64], kinds: &[DrawKind], refinement: usize, out: &mut Vec<f64>) {
    let dim = kinds.len();
    let scale = 1.0 / (refinement as f64).sqrt();
    out.clear();
    for block in fine.chunks_exact(dim * refinement) {
        for (d, kind) in kinds.iter().enumerate() {
            out.push(match kind {
                DrawKind::Gaussian => scale * (0..refinement).map(|s| block[s * dim + d]).sum::<f64>(),
                DrawKind::Uniform => block[d],
            });
        }
    }
}

/// Multilevel estimate `E[P_0] + sum_l E[P_l - P_{l-1}]` over grids with
/// `base_steps * refinement^l` steps. Level `l`, sample `i` uses replica
/// `(l << 40) | i`.
pub fn run_mlmc(cfg: &MlmcConfig, model: &ModelSpec, contract: &ContractSpec) -> Result<EstimateResult> {
    cfg.validate()?;
    let (_, discount) = setup(model, contract)?;
    let assets = model.assets() as u64;
    let mut samplers = (0..=cfg.max_level)
        .map(|l| LevelSampler::new(cfg, l, model, contract))
        .collect::<Result<Vec<_>>>()?;
    let mut acc: Vec<LevelAcc> = vec![LevelAcc::default(); cfg.max_level + 1];

    let target: Vec<u64> = match &cfg.sampling {
        MlmcSampling::Fixed(n) => n.clone(),
        MlmcSampling::TargetStdError(eps) => {
            for (l, s) in samplers.iter_mut().enumerate() {
                acc[l].extend(s, cfg, l, cfg.pilot_samples);
            }
            let cost: Vec<f64> = (0..=cfg.max_level)
                .map(|l| {
                    let coarse = if l > 0 { cfg.steps_at(l - 1) } else { 0 };
                    ((cfg.steps_at(l) + coarse) as u64 * assets) as f64
                })
                .collect();
            let var: Vec<f64> = acc.iter().map(|a| a.variance()).collect();
            let total: f64 = var.iter().zip(&cost).map(|(v, c)| (v * c).sqrt()).sum();
            var.iter()
                .zip(&cost)
                .map(|(&v, &c)| {
                    if v > 0.0 {
                        ((v / c).sqrt() * total / (eps * eps)).ceil().max(cfg.pilot_samples as f64) as u64
                    } else {
                        cfg.pilot_samples
                    }
                })
                .collect()
        }
    };
    for (l, s) in samplers.iter_mut().enumerate() {
        let more = target[l].saturating_sub(acc[l].n);
        acc[l].extend(s, cfg, l, more);
    }

    let levels: Vec<MlmcLevel> = acc
        .iter()
        .enumerate()
        .map(|(l, a)| MlmcLevel {
            steps: cfg.steps_at(l),
            samples: a.n,
            mean: a.mean(),
            variance: a.variance(),
            work: a.work,
        })
        .collect();
    let p_hat: f64 = levels.iter().map(|l| l.mean).sum();
    let se = levels.iter().map(|l| l.variance / l.samples as f64).sum::<f64>().sqrt();
    let mut res = EstimateResult::plain(
        Method::Mlmc,
        p_hat,
        discount,
        se,
        levels.iter().map(|l| l.work).sum(),
        levels.iter().map(|l| l.samples).sum(),
    );
    res.mlmc_levels = levels;
    Ok(res)
}

#[derive(Clone, Default)]
struct LevelAcc {
    n: u64,
    sum: f64,
    sum_sq: f64,
    work: u64,
}

impl LevelAcc {
    fn extend(&mut self, sampler: &mut LevelSampler, cfg: &MlmcConfig, level: usize, count: u64) {
        for i in self.n..self.n + count {
            let (y, w) = sampler.sample(cfg.seed, cfg.run, ((level as u64) << 40) | i);
            self.sum += y;
            self.sum_sq += y * y;
            self.work += w;
        }
        self.n += count;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        ((self.sum_sq - self.n as f64 * m * m) / (self.n - 1) as f64).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::Payoff;

    fn bs() -> ModelSpec {
        ModelSpec::black_scholes(0.03, 0.2, 1.0).unwrap()
    }

    #[test]
    fn sample_size_arithmetic() {
        assert_eq!(required_mc_samples(0.5, 1.0).unwrap(), 1);
        assert_eq!(required_mc_samples(1e-4, 0.05).unwrap(), 3_999_600);
        let n = required_mc_samples(2.509e-10, 0.1).unwrap() as f64;
        assert!((n / 4e11 - 1.0).abs() < 0.01);
        assert!(required_mc_samples(0.0, 0.1).is_err());
        assert!(required_mc_samples(1.0, 0.1).is_err());
    }

    #[test]
    fn certain_exercise_and_work() {
        let c = ContractSpec::new(Payoff::DigitalCall { strike: 1e-9 }, 1.0, 5).unwrap();
        let r = run_crude_mc(&McConfig::new(100, 1, 0), &bs(), &c).unwrap();
        assert_eq!(r.p_hat, 1.0);
        assert_eq!(r.work, 500);
        assert_eq!(r.price, (-0.03f64).exp());
    }

    #[test]
    fn antithetic_rejects_odd_counts_and_matches_at_zero_vol() {
        let c = ContractSpec::new(Payoff::DigitalCall { strike: 1.02 }, 1.0, 4).unwrap();
        assert!(run_antithetic_mc(&McConfig::new(7, 1, 0), &bs(), &c).is_err());
        let flat = ModelSpec::black_scholes(0.03, 0.0, 1.0).unwrap();
        let a = run_antithetic_mc(&McConfig::new(10, 1, 0), &flat, &c).unwrap();
        let m = run_crude_mc(&McConfig::new(10, 1, 0), &flat, &c).unwrap();
        assert_eq!(a.p_hat, m.p_hat);
        assert_eq!(a.p_hat, 1.0);
    }

    #[test]
    fn single_level_mlmc_is_crude_mc() {
        let c = ContractSpec::new(Payoff::AsianDigitalCall { strike: 1.05 }, 1.0, 8).unwrap();
        let mut cfg = MlmcConfig::new(8, 0, MlmcSampling::Fixed(vec![500]));
        cfg.seed = 4;
        let ml = run_mlmc(&cfg, &bs(), &c).unwrap();
        let mut hits = 0.0;
        let sim = Simulator::new(&bs(), TimeGrid::new(1.0, 8).unwrap()).unwrap();
        let mut w = 0;
        for i in 0..500u64 {
            let t = sim.simulate(&mut RngStream::new(StreamId::new(4, 0, i, 0)), &mut w);
            hits += c.payoff.exercised(&t) as u8 as f64;
        }
        assert_eq!(ml.p_hat, hits / 500.0);
        assert_eq!(ml.work, w);
    }

    #[test]
    fn coarsening_sums_gaussians() {
        let kinds = [DrawKind::Gaussian, DrawKind::Uniform];
        let fine = [1.0, 0.1, 3.0, 0.2, -1.0, 0.3, 1.0, 0.4];
        let mut out = Vec::new();
        coarsen(&fine, &kinds, 2, &mut out);
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(out, vec![4.0 * s, 0.1, 0.0, 0.3]);
    }

    #[test]
    fn coupled_bs_levels_match_exact_coarse_path() {
        // Under exact stepping, the coarse path driven by summed increments
        // lands on the fine path's values at the coarse grid points.
        let model = bs();
        let fine = Simulator::new(&model, TimeGrid::new(1.0, 4).unwrap()).unwrap();
        let coarse = Simulator::new(&model, TimeGrid::new(1.0, 2).unwrap()).unwrap();
        let mut rng = RngStream::new(StreamId::new(0, 0, 0, 0));
        let mut rec = Recorder::new(&mut rng, 4);
        let mut ft = fine.initial_trajectory();
        fine.advance(&mut ft, 0, &mut rec);
        let draws = rec.draws;
        let mut cd = Vec::new();
        coarsen(&draws, &fine.draw_kinds(), 2, &mut cd);
        let mut ct = coarse.initial_trajectory();
        coarse.advance(&mut ct, 0, &mut Replay::new(&cd));
        assert!((ct.price(1) / ft.price(2) - 1.0).abs() < 1e-12);
        assert!((ct.price(2) / ft.price(4) - 1.0).abs() < 1e-12);
    }
}
