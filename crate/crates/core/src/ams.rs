//! Adaptive multilevel splitting.
//!
//! A population of `N` trajectories is pushed towards the exercise region by
//! repeatedly taking the `K`-th smallest score as the next level, killing
//! trajectories that do not exceed it and replacing each with a clone of a
//! surviving trajectory that is resimulated from the point where it first
//! rose above the level. Every iteration multiplies the weight by the
//! surviving fraction. The estimate is the weight times the fraction of the
//! final population that is exercised.
//!
//! On a time grid, clones that are never resimulated past their branch point
//! share their parent's score exactly, so scores can tie at the level. The
//! default [`TieRule::KillAllAtLevel`] removes every trajectory at or below
//! the level and uses the actual kill count in the weight, which keeps the
//! estimator unbiased with ties. [`TieRule::ExactK`] kills exactly `K`
//! trajectories chosen uniformly among those at or below the level.

use serde::{Deserialize, Serialize};

use crate::contracts::{price_from_prob, ContractSpec};
use crate::error::{Error, Result};
use crate::importance::{default_l_max, ImportanceSpec};
use crate::models::{ModelSpec, Simulator, Trajectory};
use crate::rng::{RngStream, StreamId, CONTROL_REPLICA};

/// Number of trajectories killed per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KillCount {
    /// `K = round(k * N)`.
    Fraction(f64),
    Absolute(usize),
}

impl KillCount {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let k = match self {
            Self::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "k",
                        value: f,
                        reason: "discard fraction must lie in (0, 1)",
                    });
                }
                (f * n as f64).round() as usize
            }
            Self::Absolute(k) => k,
        };
        if k == 0 || k >= n {
            return Err(Error::Config(format!(
                "kill count K = {k} must satisfy 1 <= K < N = {n}"
            )));
        }
        Ok(k)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Kill every trajectory scoring at or below the level.
    #[default]
    KillAllAtLevel,
    /// Kill exactly `K` trajectories drawn uniformly from those at or below
    /// the level.
    ExactK,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParentRule {
    /// Parents are drawn from survivors scoring strictly above the level and
    /// branch at the first index strictly above it.
    #[default]
    AboveLevel,
    /// Parents are drawn from all survivors and branch at the first index
    /// reaching the level.
    AnySurvivor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmsConfig {
    pub n_particles: usize,
    pub kill: KillCount,
    pub l_max: f64,
    pub importance: ImportanceSpec,
    /// Defaults to [`default_iteration_cap`].
    pub max_iterations: Option<usize>,
    pub seed: u64,
    pub run: u64,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub parent_rule: ParentRule,
}

impl AmsConfig {
    /// Configuration with the importance function's default rare level.
    pub fn new(n_particles: usize, kill: KillCount, importance: ImportanceSpec) -> Self {
        Self {
            n_particles,
            kill,
            l_max: default_l_max(&importance),
            importance,
            max_iterations: None,
            seed: 0,
            run: 0,
            tie_rule: TieRule::default(),
            parent_rule: ParentRule::default(),
        }
    }

    pub fn with_stream(mut self, seed: u64, run: u64) -> Self {
        self.seed = seed;
        self.run = run;
        self
    }

    pub fn killed_per_iteration(&self) -> Result<usize> {
        self.kill.resolve(self.n_particles)
    }

    pub fn validate(&self) -> Result<()> {
        self.killed_per_iteration()?;
        crate::error::ensure_finite("l_max", self.l_max)?;
        self.importance.validate()
    }

    pub fn iteration_cap(&self) -> Result<usize> {
        let k = self.killed_per_iteration()?;
        Ok(self
            .max_iterations
            .unwrap_or_else(|| default_iteration_cap(self.n_particles, k)))
    }
}

/// Iterations after which `((N - K) / N)^q` drops below `1e-16`.
pub fn default_iteration_cap(n: usize, k: usize) -> usize {
    let ratio = (n - k) as f64 / n as f64;
    (1e-16f64.ln() / ratio.ln()).ceil() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedLMax,
    DegenerateScores,
    Extinction,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmsResult {
    pub p_hat: f64,
    pub price: f64,
    pub q_iterations: usize,
    pub final_weight: f64,
    pub work: u64,
    pub termination: Termination,
    /// Level computed at each iteration, including the one that stopped the
    /// loop.
    pub level_history: Vec<f64>,
    /// Trajectories killed at each completed iteration.
    pub kill_counts: Vec<usize>,
    pub n_particles: usize,
    pub k: usize,
    /// Exercised trajectories in the final population.
    pub hits: usize,
}

impl AmsResult {
    /// `prod_q (N - K_q) / N`, evaluated in closed form from the kill counts.
    pub fn weight_from_kill_counts(&self) -> f64 {
        weight_from_kill_counts(self.n_particles, &self.kill_counts)
    }

    /// True when every iteration killed exactly `K`.
    pub fn untied(&self) -> bool {
        self.kill_counts.iter().all(|&c| c == self.k)
    }
}

pub fn weight_from_kill_counts(n: usize, kill_counts: &[usize]) -> f64 {
    let mut sorted = kill_counts.to_vec();
    sorted.sort_unstable();
    let mut w = 1.0;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        w *= ((n - chunk[0]) as f64 / n as f64).powi(chunk.len() as i32);
    }
    w
}

/// A trajectory with its cached score.
#[derive(Clone, Debug)]
pub struct Particle {
    pub trajectory: Trajectory,
    pub score: f64,
    pub replica: usize,
    branches: u64,
}

/// What one kill-and-clone step did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloneStep {
    /// Killed replica indices, ascending.
    pub killed: Vec<usize>,
    /// Parent of each killed replica, aligned with `killed`; empty on
    /// extinction.
    pub parents: Vec<usize>,
    pub extinct: bool,
}

/// A population of scored trajectories sharing one model and score.
#[derive(Clone, Debug)]
pub struct Population {
    particles: Vec<Particle>,
    sim: Simulator,
    importance: ImportanceSpec,
    seed: u64,
    run: u64,
    work: u64,
}

impl Population {
    /// Simulates `n` fresh trajectories on replica streams `0..n`.
    pub fn simulate(
        n: usize,
        sim: Simulator,
        importance: ImportanceSpec,
        seed: u64,
        run: u64,
    ) -> Self {
        let mut work = 0;
        let particles = (0..n)
            .map(|j| {
                let mut rng = RngStream::new(StreamId::new(seed, run, j as u64, 0));
                let trajectory = sim.simulate(&mut rng, &mut work);
                let score = importance.score_from_unchecked(&trajectory, 0);
                Particle {
                    trajectory,
                    score,
                    replica: j,
                    branches: 0,
                }
            })
            .collect();
        Self {
            particles,
            sim,
            importance,
            seed,
            run,
            work,
        }
    }

    /// Wraps existing trajectories (which must come from `sim`'s grid).
    pub fn from_trajectories(
        trajectories: Vec<Trajectory>,
        sim: Simulator,
        importance: ImportanceSpec,
        seed: u64,
        run: u64,
    ) -> Result<Self> {
        let particles = trajectories
            .into_iter()
            .enumerate()
            .map(|(j, trajectory)| {
                if trajectory.grid() != sim.grid() {
                    return Err(Error::Mismatch("trajectory grid differs from simulator".into()));
                }
                let score = crate::importance::trajectory_score(&importance, &trajectory)?;
                Ok(Particle {
                    trajectory,
                    score,
                    replica: j,
                    branches: 0,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            particles,
            sim,
            importance,
            seed,
            run,
            work: 0,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.score).collect()
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    /// Kills trajectories at or below `z` and replaces them with resimulated
    /// clones of survivors. Survivors are left untouched.
    pub fn kill_and_clone(
        &mut self,
        z: f64,
        k: usize,
        tie_rule: TieRule,
        parent_rule: ParentRule,
        control: &mut RngStream,
    ) -> Result<CloneStep> {
        let candidates: Vec<usize> = (0..self.len()).filter(|&j| self.particles[j].score <= z).collect();
        if candidates.len() < k {
            return Err(Error::Config(format!(
                "only {} trajectories at or below the level, need {k}",
                candidates.len()
            )));
        }
        let mut killed = match tie_rule {
            TieRule::KillAllAtLevel => candidates,
            TieRule::ExactK => {
                // Partial Fisher-Yates: a uniform k-subset.
                let mut c = candidates;
                for i in 0..k {
                    let j = i + control.index(c.len() - i);
                    c.swap(i, j);
                }
                c.truncate(k);
                c
            }
        };
        killed.sort_unstable();
        let mut is_killed = vec![false; self.len()];
        for &j in &killed {
            is_killed[j] = true;
        }
        let eligible: Vec<usize> = (0..self.len())
            .filter(|&j| {
                !is_killed[j] && (parent_rule == ParentRule::AnySurvivor || self.particles[j].score > z)
            })
            .collect();
        if eligible.is_empty() {
            return Ok(CloneStep {
                killed,
                parents: Vec::new(),
                extinct: true,
            });
        }
        let parents: Vec<usize> = killed.iter().map(|_| eligible[control.index(eligible.len())]).collect();
        let strict = parent_rule == ParentRule::AboveLevel;
        for (&j, &parent) in killed.iter().zip(&parents) {
            let (child, source) = pair_mut(&mut self.particles, j, parent);
            let branch = self
                .importance
                .crossing_unchecked(&source.trajectory, z, strict)
                .ok_or(Error::NoCrossing(z))?;
            child.trajectory.copy_prefix_from(&source.trajectory, branch);
            child.branches += 1;
            let mut rng = RngStream::new(StreamId::new(self.seed, self.run, j as u64, child.branches));
            self.work += self.sim.resume_in_place(&mut child.trajectory, branch, &mut rng)?;
            child.score = self.importance.score_from_unchecked(&child.trajectory, branch);
            debug_assert!(child.score >= z);
        }
        Ok(CloneStep {
            killed,
            parents,
            extinct: false,
        })
    }
}

/// Mutable reference to `v[a]` and shared reference to `v[b]`, `a != b`.
fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &lo[b])
    }
}

/// The `k`-th smallest score (1-indexed), duplicates counted.
pub fn select_level(scores: &[f64], k: usize) -> Result<f64> {
    if scores.is_empty() || k == 0 || k > scores.len() {
        return Err(Error::Config(format!(
            "order statistic {k} requested from {} scores",
            scores.len()
        )));
    }
    let mut buf = scores.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// `w * mean(indicators)`.
pub fn ams_estimate(w: f64, indicators: &[bool]) -> f64 {
    if indicators.is_empty() {
        return 0.0;
    }
    let hits = indicators.iter().filter(|&&b| b).count();
    w * hits as f64 / indicators.len() as f64
}

/// Runs one AMS estimate. Deterministic given `cfg.seed` and `cfg.run`.
pub fn run_ams(cfg: &AmsConfig, model: &ModelSpec, contract: &ContractSpec) -> Result<AmsResult> {
    cfg.validate()?;
    contract.validate()?;
    if cfg.importance.payoff != contract.payoff {
        return Err(Error::Incompatible(
            "importance function was built for a different payoff".into(),
        ));
    }
    if contract.kind().is_multi_asset() != (model.assets() > 1) {
        return Err(Error::Incompatible(format!(
            "{:?} contract cannot be priced under the {} model",
            contract.kind(),
            model.name()
        )));
    }
    let n = cfg.n_particles;
    let k = cfg.killed_per_iteration()?;
    let cap = cfg.iteration_cap()?;
    let sim = Simulator::new(model, contract.grid()?)?;
    let mut pop = Population::simulate(n, sim, cfg.importance, cfg.seed, cfg.run);
    let mut control = RngStream::new(StreamId::new(cfg.seed, cfg.run, CONTROL_REPLICA, 0));

    let mut weight = 1.0;
    let mut level_history = Vec::new();
    let mut kill_counts = Vec::new();
    let mut scores = pop.scores();
    let termination = loop {
        let z = select_level(&scores, k)?;
        level_history.push(z);
        if z >= cfg.l_max {
            break Termination::ReachedLMax;
        }
        if scores.iter().all(|&s| s == scores[0]) {
            break Termination::DegenerateScores;
        }
        if kill_counts.len() >= cap {
            log::warn!("AMS stopped at the iteration cap ({cap}) before reaching the rare level");
            break Termination::IterationCap;
        }
        let step = pop.kill_and_clone(z, k, cfg.tie_rule, cfg.parent_rule, &mut control)?;
        if step.extinct {
            break Termination::Extinction;
        }
        let killed = match cfg.tie_rule {
            TieRule::KillAllAtLevel => step.killed.len(),
            TieRule::ExactK => k,
        };
        weight *= (n - killed) as f64 / n as f64;
        kill_counts.push(killed);
        for &j in &step.killed {
            scores[j] = pop.particles[j].score;
        }
    };

    let hits = pop
        .particles
        .iter()
        .filter(|p| contract.payoff.exercised(&p.trajectory))
        .count();
    let p_hat = weight * hits as f64 / n as f64;
    Ok(AmsResult {
        p_hat,
        price: price_from_prob(p_hat, model.rate(), contract.maturity)?,
        q_iterations: kill_counts.len(),
        final_weight: weight,
        work: pop.work,
        termination,
        level_history,
        kill_counts,
        n_particles: n,
        k,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::Payoff;
    use crate::models::TimeGrid;

    #[test]
    fn order_statistic() {
        assert_eq!(select_level(&[3.0, 1.0, 4.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(select_level(&[5.0; 7], 3).unwrap(), 5.0);
        assert_eq!(select_level(&[2.0, 2.0, 1.0], 3).unwrap(), 2.0);
        assert!(select_level(&[], 1).is_err());
        assert!(select_level(&[1.0], 2).is_err());
    }

    #[test]
    fn estimator_arithmetic() {
        let w = 0.55f64.powi(3);
        assert!((ams_estimate(w, &[true; 10]) - 0.166_375).abs() < 1e-15);
        assert_eq!(ams_estimate(0.3, &[false; 4]), 0.0);
        assert_eq!(ams_estimate(0.5, &[true, false, true, false]), 0.25);
    }

    #[test]
    fn kill_count_resolution() {
        assert_eq!(KillCount::Fraction(0.45).resolve(50_000).unwrap(), 22_500);
        assert_eq!(KillCount::Absolute(1).resolve(100).unwrap(), 1);
        assert!(KillCount::Fraction(0.001).resolve(100).is_err());
        assert!(KillCount::Absolute(100).resolve(100).is_err());
        assert!(KillCount::Fraction(1.0).resolve(100).is_err());
    }

    #[test]
    fn iteration_cap_default() {
        assert_eq!(default_iteration_cap(100, 45), 62);
        assert_eq!(default_iteration_cap(100, 1), 3666);
    }

    #[test]
    fn weight_closed_form() {
        let w = weight_from_kill_counts(10, &[2, 3, 2]);
        assert!((w - 0.8 * 0.7 * 0.8).abs() < 1e-15);
    }

    fn constant_population(levels: &[f64], steps: usize) -> (Population, ContractSpec) {
        let contract = ContractSpec::new(Payoff::DigitalCall { strike: 10.0 }, 1.0, steps).unwrap();
        let model = ModelSpec::black_scholes(0.0, 0.2, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let sim = Simulator::new(&model, grid).unwrap();
        let importance = ImportanceSpec::path_based(&contract).unwrap();
        let trajs = levels
            .iter()
            .map(|&s| Trajectory::from_prices(grid, &vec![s; steps + 1]).unwrap())
            .collect();
        (Population::from_trajectories(trajs, sim, importance, 1, 0).unwrap(), contract)
    }

    #[test]
    fn survivors_untouched_and_clones_reach_level() {
        let (mut pop, _) = constant_population(&[0.5, 0.9, 1.3, 0.7], 4);
        let before = pop.particles().to_vec();
        let mut control = RngStream::new(StreamId::new(1, 0, CONTROL_REPLICA, 0));
        let step = pop
            .kill_and_clone(0.7, 2, TieRule::KillAllAtLevel, ParentRule::AboveLevel, &mut control)
            .unwrap();
        assert_eq!(step.killed, vec![0, 3]);
        assert!(step.parents.iter().all(|p| [1, 2].contains(p)));
        for j in [1, 2] {
            assert_eq!(pop.particles()[j].trajectory, before[j].trajectory);
        }
        for &j in &step.killed {
            assert!(pop.particles()[j].score > 0.7);
        }
        assert!(pop.work() > 0);
    }

    #[test]
    fn extinction_when_no_parent_exceeds_level() {
        let (mut pop, _) = constant_population(&[1.0, 2.0, 2.0, 2.0], 2);
        let mut control = RngStream::new(StreamId::new(1, 0, CONTROL_REPLICA, 0));
        let step = pop
            .kill_and_clone(2.0, 2, TieRule::KillAllAtLevel, ParentRule::AboveLevel, &mut control)
            .unwrap();
        assert!(step.extinct);
        assert_eq!(step.killed.len(), 4);
    }

    #[test]
    fn non_rare_event_needs_no_iterations() {
        let contract = ContractSpec::new(Payoff::DigitalCall { strike: 1.2 }, 1.0, 10).unwrap();
        let model = ModelSpec::black_scholes(0.03, 0.2, 1.0).unwrap();
        let imp = ImportanceSpec::path_based(&contract).unwrap();
        let mut cfg = AmsConfig::new(200, KillCount::Fraction(0.45), imp);
        cfg.l_max = 0.1;
        let res = run_ams(&cfg, &model, &contract).unwrap();
        assert_eq!(res.q_iterations, 0);
        assert_eq!(res.final_weight, 1.0);
        assert_eq!(res.termination, Termination::ReachedLMax);
        assert_eq!(res.p_hat, res.hits as f64 / 200.0);
        assert_eq!(res.work, 2000);
    }

    #[test]
    fn run_is_deterministic_and_consistent() {
        let contract = ContractSpec::new(Payoff::DigitalCall { strike: 2.0 }, 1.0, 20).unwrap();
        let model = ModelSpec::black_scholes(0.03, 0.2, 1.0).unwrap();
        let imp = ImportanceSpec::path_based(&contract).unwrap();
        let cfg = AmsConfig::new(500, KillCount::Fraction(0.2), imp).with_stream(3, 1);
        let a = run_ams(&cfg, &model, &contract).unwrap();
        let b = run_ams(&cfg, &model, &contract).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.termination, Termination::ReachedLMax);
        assert!(a.level_history.windows(2).all(|w| w[0] <= w[1]));
        assert!((a.final_weight / a.weight_from_kill_counts() - 1.0).abs() < 1e-12);
        assert!(a.p_hat <= a.final_weight && a.p_hat > 0.0);
    }

    #[test]
    fn mismatched_importance_rejected() {
        let contract = ContractSpec::new(Payoff::DigitalCall { strike: 2.0 }, 1.0, 20).unwrap();
        let other = ContractSpec::new(Payoff::DigitalCall { strike: 2.5 }, 1.0, 20).unwrap();
        let model = ModelSpec::black_scholes(0.03, 0.2, 1.0).unwrap();
        let cfg = AmsConfig::new(50, KillCount::Fraction(0.2), ImportanceSpec::path_based(&other).unwrap());
        assert!(matches!(run_ams(&cfg, &model, &contract), Err(Error::Incompatible(_))));
    }
}
