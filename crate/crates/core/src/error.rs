use thiserror::Error;

/// Errors produced by the pricing engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("grid index {index} out of range 0..={steps}")]
    IndexOutOfRange { index: usize, steps: usize },

    #[error("contract and trajectory do not match: {0}")]
    Mismatch(String),

    #[error("importance function is incompatible with the contract: {0}")]
    Incompatible(String),

    #[error("no grid index reaches level {0}")]
    NoCrossing(f64),

    #[error("correlation matrix is not positive definite")]
    NotFactorizable,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("relative accuracy undefined for non-positive mean {0}")]
    UndefinedRelativeAccuracy(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative",
        })
    }
}
