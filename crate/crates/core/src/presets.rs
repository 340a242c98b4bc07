//! Parameter sets used by the benchmark experiments.

use crate::contracts::{ContractSpec, Payoff};
use crate::error::Result;
use crate::models::{BsParams, HestonParams, HestonScheme, ModelSpec, MultiGbmParams};

pub const RATE: f64 = 0.03;
pub const BS_SIGMA: f64 = 0.2;
pub const SPOT: f64 = 1.0;
pub const MATURITY: f64 = 1.0;

/// Grid steps per year for path-dependent contracts.
pub const STEPS_PER_YEAR: usize = 250;

pub const HESTON: HestonParams = HestonParams {
    r: RATE,
    kappa: 2.0,
    theta: 0.04,
    vol_of_vol: 0.3,
    rho: -0.5,
    v0: 0.04,
    s0: SPOT,
};

/// Strike of the deep out-of-the-money digital under Black–Scholes.
pub const EXTREME_STRIKE: f64 = 3.5;
/// Strike of the Heston digital call experiments.
pub const HESTON_STRIKE: f64 = 2.2;

pub const MULTI_ASSETS: usize = 3;
pub const MULTI_RHO: f64 = 0.2;
pub const DISPERSION_THRESHOLD: f64 = 1.0;
pub const DISPERSION_AVERAGE: f64 = 1.4;

pub fn black_scholes() -> ModelSpec {
    ModelSpec::BlackScholes(BsParams {
        r: RATE,
        sigma: BS_SIGMA,
        s0: SPOT,
    })
}

pub fn heston(scheme: HestonScheme) -> ModelSpec {
    ModelSpec::Heston {
        params: HESTON,
        scheme,
    }
}

pub fn multi_gbm_params() -> MultiGbmParams {
    MultiGbmParams::uniform(MULTI_ASSETS, RATE, BS_SIGMA, SPOT, MULTI_RHO)
}

pub fn multi_gbm() -> Result<ModelSpec> {
    ModelSpec::multi_gbm(multi_gbm_params())
}

pub fn digital_call(strike: f64, steps: usize) -> Result<ContractSpec> {
    ContractSpec::new(Payoff::DigitalCall { strike }, MATURITY, steps)
}

pub fn dispersion(steps: usize) -> Result<ContractSpec> {
    ContractSpec::new(
        Payoff::MultiAssetDispersion {
            threshold: DISPERSION_THRESHOLD,
            average_level: DISPERSION_AVERAGE,
        },
        MATURITY,
        steps,
    )
}
