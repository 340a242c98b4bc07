//! Binary payoffs, Black–Scholes reference prices and discounting.
//!
//! Every exercise condition is a strict inequality; a tie pays nothing.
//! Barrier conditions are monitored on the simulation grid only.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::models::{TimeGrid, Trajectory};
use crate::stats::normal_cdf;

/// Payoff family without its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractKind {
    DigitalCall,
    DigitalPut,
    AsianDigitalCall,
    AsianDigitalPut,
    BarrierUpInCall,
    BarrierUpInPut,
    MultiAssetDispersion,
}

impl ContractKind {
    pub const ALL: [ContractKind; 7] = [
        Self::DigitalCall,
        Self::DigitalPut,
        Self::AsianDigitalCall,
        Self::AsianDigitalPut,
        Self::BarrierUpInCall,
        Self::BarrierUpInPut,
        Self::MultiAssetDispersion,
    ];

    pub fn side(self) -> OptionSide {
        match self {
            Self::DigitalPut | Self::AsianDigitalPut | Self::BarrierUpInPut => OptionSide::Put,
            _ => OptionSide::Call,
        }
    }

    pub fn is_multi_asset(self) -> bool {
        self == Self::MultiAssetDispersion
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptionSide {
    Call,
    Put,
}

/// A binary payoff with its parameters.
///
/// * `DigitalCall`: `S_T > strike`
/// * `AsianDigitalCall`: `(1/m) * sum_{t=1..m} S_t > strike`
/// * `BarrierUpInCall`: grid maximum of `S` over `[0, T]` above `barrier`
/// * puts use `<` and, for the barrier, the grid minimum
/// * `MultiAssetDispersion`: largest pairwise terminal gap above `threshold`
///   and mean terminal price above `average_level`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payoff {
    DigitalCall { strike: f64 },
    DigitalPut { strike: f64 },
    AsianDigitalCall { strike: f64 },
    AsianDigitalPut { strike: f64 },
    BarrierUpInCall { barrier: f64 },
    BarrierUpInPut { barrier: f64 },
    MultiAssetDispersion { threshold: f64, average_level: f64 },
}

impl Payoff {
    pub fn kind(&self) -> ContractKind {
        match self {
            Self::DigitalCall { .. } => ContractKind::DigitalCall,
            Self::DigitalPut { .. } => ContractKind::DigitalPut,
            Self::AsianDigitalCall { .. } => ContractKind::AsianDigitalCall,
            Self::AsianDigitalPut { .. } => ContractKind::AsianDigitalPut,
            Self::BarrierUpInCall { .. } => ContractKind::BarrierUpInCall,
            Self::BarrierUpInPut { .. } => ContractKind::BarrierUpInPut,
            Self::MultiAssetDispersion { .. } => ContractKind::MultiAssetDispersion,
        }
    }

    /// Strike or barrier level of a single-asset payoff.
    pub fn level(&self) -> Option<f64> {
        match *self {
            Self::DigitalCall { strike }
            | Self::DigitalPut { strike }
            | Self::AsianDigitalCall { strike }
            | Self::AsianDigitalPut { strike } => Some(strike),
            Self::BarrierUpInCall { barrier } | Self::BarrierUpInPut { barrier } => Some(barrier),
            Self::MultiAssetDispersion { .. } => None,
        }
    }

    /// Builds a payoff of `kind` from a level (strike or barrier); the
    /// dispersion contract takes `(threshold, average_level)` instead.
    pub fn from_kind(kind: ContractKind, level: f64, average_level: Option<f64>) -> Result<Self> {
        let p = match kind {
            ContractKind::DigitalCall => Self::DigitalCall { strike: level },
            ContractKind::DigitalPut => Self::DigitalPut { strike: level },
            ContractKind::AsianDigitalCall => Self::AsianDigitalCall { strike: level },
            ContractKind::AsianDigitalPut => Self::AsianDigitalPut { strike: level },
            ContractKind::BarrierUpInCall => Self::BarrierUpInCall { barrier: level },
            ContractKind::BarrierUpInPut => Self::BarrierUpInPut { barrier: level },
            ContractKind::MultiAssetDispersion => Self::MultiAssetDispersion {
                threshold: level,
                average_level: average_level.ok_or_else(|| {
                    Error::Config("dispersion contract needs an average level".into())
                })?,
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MultiAssetDispersion {
                threshold,
                average_level,
            } => {
                ensure_positive("threshold", threshold)?;
                ensure_positive("average_level", average_level)
            }
            _ => ensure_positive("strike", self.level().unwrap_or(f64::NAN)),
        }
    }

    /// Exercise test without shape checks; callers guarantee the trajectory
    /// was produced for this contract.
    #[inline]
    pub(crate) fn exercised(&self, traj: &Trajectory) -> bool {
        let m = traj.steps();
        match *self {
            Self::DigitalCall { strike } => above(traj.terminal(), strike),
            Self::DigitalPut { strike } => above(strike, traj.terminal()),
            Self::AsianDigitalCall { strike } => above(traj.running_sum(m) / m as f64, strike),
            Self::AsianDigitalPut { strike } => above(strike, traj.running_sum(m) / m as f64),
            Self::BarrierUpInCall { barrier } => above(traj.running_max(m), barrier),
            Self::BarrierUpInPut { barrier } => above(barrier, traj.running_min(m)),
            Self::MultiAssetDispersion {
                threshold,
                average_level,
            } => {
                let s = traj.terminal_prices();
                above(dispersion(s), threshold) && above(crate::stats::mean(s), average_level)
            }
        }
    }
}

/// Strict `x > level`, treating values within a few ulps of the level as a
/// tie. Decimal inputs such as `(2.4 + 0.9 + 0.9) / 3` against `1.4` would
/// otherwise be decided by representation error.
#[inline]
pub(crate) fn above(x: f64, level: f64) -> bool {
    x - level > TIE_ULPS * f64::EPSILON * x.abs().max(level.abs())
}

const TIE_ULPS: f64 = 4.0;

/// Largest pairwise absolute difference, i.e. `max - min`.
#[inline]
pub(crate) fn dispersion(prices: &[f64]) -> f64 {
    let (lo, hi) = prices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    hi - lo
}

/// A payoff together with the grid it is monitored on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub payoff: Payoff,
    pub maturity: f64,
    pub steps: usize,
}

impl ContractSpec {
    pub fn new(payoff: Payoff, maturity: f64, steps: usize) -> Result<Self> {
        let c = Self {
            payoff,
            maturity,
            steps,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.payoff.validate()?;
        TimeGrid::new(self.maturity, self.steps).map(|_| ())
    }

    pub fn kind(&self) -> ContractKind {
        self.payoff.kind()
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.maturity, self.steps)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        self.steps = steps;
        self.validate()?;
        Ok(self)
    }
}

/// Result of evaluating a binary payoff on one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PayoffOutcome {
    pub exercised: bool,
}

impl PayoffOutcome {
    /// 1 if exercised, otherwise 0.
    pub fn indicator(self) -> u8 {
        self.exercised as u8
    }

    pub fn value(self) -> f64 {
        if self.exercised {
            1.0
        } else {
            0.0
        }
    }
}

/// Evaluates the payoff indicator after checking that the trajectory matches
/// the contract's grid and asset count.
pub fn payoff_indicator(contract: &ContractSpec, traj: &Trajectory) -> Result<PayoffOutcome> {
    check_trajectory(contract, traj)?;
    Ok(PayoffOutcome {
        exercised: contract.payoff.exercised(traj),
    })
}

pub(crate) fn check_trajectory(contract: &ContractSpec, traj: &Trajectory) -> Result<()> {
    let grid = traj.grid();
    if grid.steps() != contract.steps || (grid.maturity() - contract.maturity).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "contract expects T = {} with {} steps, trajectory has T = {} with {} steps",
            contract.maturity,
            contract.steps,
            grid.maturity(),
            grid.steps()
        )));
    }
    let multi = contract.kind().is_multi_asset();
    if multi && traj.assets() < 2 {
        return Err(Error::Mismatch(
            "dispersion contract needs a multi-asset trajectory".into(),
        ));
    }
    if !multi && traj.assets() != 1 {
        return Err(Error::Mismatch(format!(
            "single-asset contract given a {}-asset trajectory",
            traj.assets()
        )));
    }
    Ok(())
}

/// Black–Scholes price of a digital paying 1 at `T`:
/// `exp(-rT) * Phi(+-d2)` with `d2 = (ln(s0/K) + (r - sigma^2/2) T) / (sigma sqrt(T))`.
///
/// With `sigma = 0` the price is the discounted indicator of the
/// deterministic forward finishing in the money.
pub fn bs_digital_closed_form(
    s0: f64,
    strike: f64,
    r: f64,
    sigma: f64,
    maturity: f64,
    side: OptionSide,
) -> Result<f64> {
    ensure_positive("s0", s0)?;
    ensure_positive("strike", strike)?;
    ensure_finite("r", r)?;
    ensure_non_negative("sigma", sigma)?;
    ensure_positive("maturity", maturity)?;
    Ok(digital_value(s0, strike, r, sigma, maturity, side))
}

/// Unchecked digital value; `tau = 0` yields the undiscounted indicator.
#[inline]
pub(crate) fn digital_value(spot: f64, strike: f64, r: f64, sigma: f64, tau: f64, side: OptionSide) -> f64 {
    let vol = sigma * tau.sqrt();
    let discount = (-r * tau).exp();
    if vol == 0.0 {
        let forward = spot * (r * tau).exp();
        let hit = match side {
            OptionSide::Call => forward > strike,
            OptionSide::Put => forward < strike,
        };
        return if hit { discount } else { 0.0 };
    }
    let d2 = ((spot / strike).ln() + (r - 0.5 * sigma * sigma) * tau) / vol;
    match side {
        OptionSide::Call => discount * normal_cdf(d2),
        OptionSide::Put => discount * normal_cdf(-d2),
    }
}

/// Discounted price `exp(-rT) * p`.
pub fn price_from_prob(p_hat: f64, r: f64, maturity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidParameter {
            name: "p_hat",
            value: p_hat,
            reason: "probability must lie in [0, 1]",
        });
    }
    ensure_finite("r", r)?;
    ensure_non_negative("maturity", maturity)?;
    Ok((-r * maturity).exp() * p_hat)
}
