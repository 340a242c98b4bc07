//! Fixtures shared by the criterion benchmarks.

use digisplit::models::HestonScheme;
use digisplit::{presets, AmsConfig, ContractSpec, ImportanceFamily, ImportanceSpec, KillCount, ModelSpec};

/// A named model/contract pair.
pub struct Case {
    pub name: &'static str,
    pub model: ModelSpec,
    pub contract: ContractSpec,
}

/// One case per model family, on the daily grid unless stepping is exact.
pub fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "bs-digital",
            model: presets::black_scholes(),
            contract: presets::digital_call(2.0, presets::STEPS_PER_YEAR).unwrap(),
        },
        Case {
            name: "heston-qe-digital",
            model: presets::heston(HestonScheme::QuadraticExponential),
            contract: presets::digital_call(presets::HESTON_STRIKE, presets::STEPS_PER_YEAR).unwrap(),
        },
        Case {
            name: "heston-euler-digital",
            model: presets::heston(HestonScheme::Euler),
            contract: presets::digital_call(presets::HESTON_STRIKE, presets::STEPS_PER_YEAR).unwrap(),
        },
        Case {
            name: "multi-dispersion",
            model: presets::multi_gbm().unwrap(),
            contract: presets::dispersion(1).unwrap(),
        },
    ]
}

pub fn ams_config(case: &Case, n: usize, k: f64) -> AmsConfig {
    let family = if case.contract.kind().is_multi_asset() {
        ImportanceFamily::MultiAssetSum
    } else {
        ImportanceFamily::PathBased
    };
    let importance = ImportanceSpec::for_model(family, &case.contract, &case.model).unwrap();
    AmsConfig::new(n, KillCount::Fraction(k), importance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for case in cases() {
            ams_config(&case, 100, 0.1).validate().unwrap();
            case.contract.validate().unwrap();
        }
    }
}
