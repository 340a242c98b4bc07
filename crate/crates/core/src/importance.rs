//! Importance (score) functions measuring how close a path is to exercise.
//!
//! A trajectory's score is the largest per-index score along the grid. For
//! every shipped contract/family pair, an exercised trajectory scores at
//! least [`default_l_max`], so stopping the splitting at that level never
//! discards paths in the exercise region.

use serde::{Deserialize, Serialize};

use crate::contracts::{digital_value, dispersion, ContractKind, ContractSpec, OptionSide, Payoff};
use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::models::{ModelSpec, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportanceFamily {
    /// The path statistic the payoff tests (spot, running average or running
    /// extremum), negated for puts.
    PathBased,
    /// Black–Scholes digital value with the path statistic as spot and the
    /// remaining maturity as time to expiry.
    BsAnalytic,
    /// Current price dispersion plus current mean price across assets.
    MultiAssetSum,
}

/// A score function bound to one contract.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSpec {
    pub family: ImportanceFamily,
    pub payoff: Payoff,
    /// Volatility used by the analytic family.
    pub sigma: f64,
    /// Rate used by the analytic family.
    pub rate: f64,
}

impl ImportanceSpec {
    pub fn path_based(contract: &ContractSpec) -> Result<Self> {
        Self::with_inputs(ImportanceFamily::PathBased, contract.payoff, 0.0, 0.0)
    }

    pub fn multi_asset_sum(contract: &ContractSpec) -> Result<Self> {
        Self::with_inputs(ImportanceFamily::MultiAssetSum, contract.payoff, 0.0, 0.0)
    }

    pub fn bs_analytic(contract: &ContractSpec, sigma: f64, rate: f64) -> Result<Self> {
        Self::with_inputs(ImportanceFamily::BsAnalytic, contract.payoff, sigma, rate)
    }

    /// Builds `family` for `contract`, taking the analytic family's volatility
    /// from the model: `sigma` under Black–Scholes, the long-run volatility
    /// `sqrt(theta)` under Heston.
    pub fn for_model(family: ImportanceFamily, contract: &ContractSpec, model: &ModelSpec) -> Result<Self> {
        let sigma = match model {
            ModelSpec::BlackScholes(p) => p.sigma,
            ModelSpec::Heston { params, .. } => params.theta.sqrt(),
            ModelSpec::MultiGbm(m) => m.params().sigma.first().copied().unwrap_or(0.0),
        };
        Self::with_inputs(family, contract.payoff, sigma, model.rate())
    }

    pub fn with_inputs(family: ImportanceFamily, payoff: Payoff, sigma: f64, rate: f64) -> Result<Self> {
        let spec = Self {
            family,
            payoff,
            sigma,
            rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the analytic family's volatility input.
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let multi = self.payoff.kind().is_multi_asset();
        match (self.family, multi) {
            (ImportanceFamily::MultiAssetSum, true) => Ok(()),
            (ImportanceFamily::MultiAssetSum, false) => Err(Error::Incompatible(
                "the multi-asset score only serves the dispersion contract".into(),
            )),
            (_, true) => Err(Error::Incompatible(
                "the dispersion contract needs the multi-asset score".into(),
            )),
            (ImportanceFamily::BsAnalytic, false) => {
                ensure_non_negative("sigma", self.sigma)?;
                ensure_finite("rate", self.rate)
            }
            (ImportanceFamily::PathBased, false) => Ok(()),
        }
    }

    /// Score at grid index `i` without bounds or shape checks.
    #[inline]
    pub(crate) fn score_unchecked(&self, traj: &Trajectory, i: usize) -> f64 {
        match self.family {
            ImportanceFamily::PathBased => {
                let x = path_statistic(&self.payoff, traj, i);
                match self.payoff.kind().side() {
                    OptionSide::Call => x,
                    OptionSide::Put => -x,
                }
            }
            ImportanceFamily::BsAnalytic => {
                let spot = path_statistic(&self.payoff, traj, i);
                let strike = self.payoff.level().unwrap_or(f64::NAN);
                let tau = traj.grid().remaining(i);
                digital_value(spot, strike, self.rate, self.sigma, tau, self.payoff.kind().side())
            }
            ImportanceFamily::MultiAssetSum => {
                let s = traj.prices_at(i);
                dispersion(s) + crate::stats::mean(s)
            }
        }
    }

    /// Largest score over indices `from..=m`.
    pub(crate) fn score_from_unchecked(&self, traj: &Trajectory, from: usize) -> f64 {
        let m = traj.steps();
        if from == 0 && self.family == ImportanceFamily::PathBased {
            match self.payoff {
                Payoff::DigitalCall { .. } | Payoff::BarrierUpInCall { .. } => return traj.running_max(m),
                Payoff::DigitalPut { .. } | Payoff::BarrierUpInPut { .. } => return -traj.running_min(m),
                _ => {}
            }
        }
        (from..=m).fold(f64::NEG_INFINITY, |acc, i| acc.max(self.score_unchecked(traj, i)))
    }

    /// Smallest index whose score is `>= z` (or `> z` when `strict`).
    pub(crate) fn crossing_unchecked(&self, traj: &Trajectory, z: f64, strict: bool) -> Option<usize> {
        let hit = |x: f64| if strict { x > z } else { x >= z };
        if self.family == ImportanceFamily::PathBased {
            // The running extremum is monotone and first reaches a level at
            // the same index as the spot does, so binary search applies.
            let idx = match self.payoff {
                Payoff::DigitalCall { .. } | Payoff::BarrierUpInCall { .. } => {
                    Some(traj.running_max_slice().partition_point(|&x| !hit(x)))
                }
                Payoff::DigitalPut { .. } | Payoff::BarrierUpInPut { .. } => {
                    Some(traj.running_min_slice().partition_point(|&x| !hit(-x)))
                }
                _ => None,
            };
            if let Some(i) = idx {
                return (i < traj.len()).then_some(i);
            }
        }
        (0..traj.len()).find(|&i| hit(self.score_unchecked(traj, i)))
    }

    fn check(&self, traj: &Trajectory) -> Result<()> {
        let multi = self.payoff.kind().is_multi_asset();
        if multi != (traj.assets() > 1) {
            return Err(Error::Mismatch(format!(
                "{:?} score given a {}-asset trajectory",
                self.payoff.kind(),
                traj.assets()
            )));
        }
        Ok(())
    }
}

/// The path quantity a single-asset payoff tests, at index `i`.
#[inline]
fn path_statistic(payoff: &Payoff, traj: &Trajectory, i: usize) -> f64 {
    match payoff {
        Payoff::DigitalCall { .. } | Payoff::DigitalPut { .. } => traj.price(i),
        Payoff::AsianDigitalCall { .. } | Payoff::AsianDigitalPut { .. } => traj.running_average(i),
        Payoff::BarrierUpInCall { .. } => traj.running_max(i),
        Payoff::BarrierUpInPut { .. } => traj.running_min(i),
        Payoff::MultiAssetDispersion { .. } => f64::NAN,
    }
}

/// Score of `traj` at grid index `i`.
pub fn score_at(spec: &ImportanceSpec, traj: &Trajectory, i: usize) -> Result<f64> {
    spec.check(traj)?;
    if i > traj.steps() {
        return Err(Error::IndexOutOfRange {
            index: i,
            steps: traj.steps(),
        });
    }
    Ok(spec.score_unchecked(traj, i))
}

/// Highest score reached anywhere on the grid.
pub fn trajectory_score(spec: &ImportanceSpec, traj: &Trajectory) -> Result<f64> {
    spec.check(traj)?;
    Ok(spec.score_from_unchecked(traj, 0))
}

/// Highest score over indices `from..=m`.
pub fn score_from(spec: &ImportanceSpec, traj: &Trajectory, from: usize) -> Result<f64> {
    spec.check(traj)?;
    if from > traj.steps() {
        return Err(Error::IndexOutOfRange {
            index: from,
            steps: traj.steps(),
        });
    }
    Ok(spec.score_from_unchecked(traj, from))
}

/// Smallest grid index whose score is at least `z`.
pub fn first_crossing_index(spec: &ImportanceSpec, traj: &Trajectory, z: f64) -> Result<usize> {
    spec.check(traj)?;
    spec.crossing_unchecked(traj, z, false).ok_or(Error::NoCrossing(z))
}

/// Smallest grid index whose score strictly exceeds `z`.
pub fn first_index_above(spec: &ImportanceSpec, traj: &Trajectory, z: f64) -> Result<usize> {
    spec.check(traj)?;
    spec.crossing_unchecked(traj, z, true).ok_or(Error::NoCrossing(z))
}

/// Level implied by the exercise region: the strike or barrier (negated for
/// puts) for path scores, one half for analytic scores, and
/// `threshold + average_level` for the multi-asset score.
pub fn default_l_max(spec: &ImportanceSpec) -> f64 {
    match spec.family {
        ImportanceFamily::PathBased => {
            let level = spec.payoff.level().unwrap_or(f64::NAN);
            match spec.payoff.kind().side() {
                OptionSide::Call => level,
                OptionSide::Put => -level,
            }
        }
        ImportanceFamily::BsAnalytic => 0.5,
        ImportanceFamily::MultiAssetSum => match spec.payoff {
            Payoff::MultiAssetDispersion {
                threshold,
                average_level,
            } => threshold + average_level,
            _ => f64::NAN,
        },
    }
}

/// Families that can score `kind`.
pub fn compatible_families(kind: ContractKind) -> &'static [ImportanceFamily] {
    if kind.is_multi_asset() {
        &[ImportanceFamily::MultiAssetSum]
    } else {
        &[ImportanceFamily::PathBased, ImportanceFamily::BsAnalytic]
    }
}
