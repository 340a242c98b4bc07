//! Asset dynamics: parameter sets, single-step schemes, and path simulation
//! with restart from any grid index.

pub(crate) mod simulator;
mod steppers;
mod trajectory;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

pub use simulator::{resume_path, simulate_multi_path, simulate_path, DrawKind, Simulator};
pub use steppers::{
    qe_moments, step_bs_exact, step_heston_euler, step_heston_milstein, step_heston_qe,
    QeCoefficients, QeMoments, QE_SWITCH_THRESHOLD,
};
pub use trajectory::Trajectory;

/// Black–Scholes parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub r: f64,
    pub sigma: f64,
    pub s0: f64,
}

impl BsParams {
    pub fn new(r: f64, sigma: f64, s0: f64) -> Result<Self> {
        let p = Self { r, sigma, s0 };
        p.validate()?;
        Ok(p)
    }

    /// `sigma = 0` is accepted as the deterministic-growth limit.
    pub fn validate(&self) -> Result<()> {
        ensure_finite("r", self.r)?;
        ensure_non_negative("sigma", self.sigma)?;
        ensure_positive("s0", self.s0)
    }
}

/// Heston stochastic-volatility parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub r: f64,
    pub kappa: f64,
    pub theta: f64,
    pub vol_of_vol: f64,
    pub rho: f64,
    pub v0: f64,
    pub s0: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("r", self.r)?;
        ensure_positive("kappa", self.kappa)?;
        ensure_positive("theta", self.theta)?;
        ensure_non_negative("vol_of_vol", self.vol_of_vol)?;
        ensure_non_negative("v0", self.v0)?;
        ensure_positive("s0", self.s0)?;
        ensure_finite("rho", self.rho)?;
        if self.rho.abs() > 1.0 {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "must lie in [-1, 1]",
            });
        }
        Ok(())
    }
}

/// Discretization of the Heston variance (and price) equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HestonScheme {
    #[default]
    QuadraticExponential,
    Euler,
    Milstein,
}

/// Correlated multi-asset geometric Brownian motion parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiGbmParams {
    pub r: f64,
    pub sigma: Vec<f64>,
    pub s0: Vec<f64>,
    /// Row-major correlation matrix.
    pub corr: Vec<Vec<f64>>,
}

impl MultiGbmParams {
    /// `n` assets with a common volatility, start price and pairwise
    /// correlation.
    pub fn uniform(n: usize, r: f64, sigma: f64, s0: f64, rho: f64) -> Self {
        let corr = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        Self {
            r,
            sigma: vec![sigma; n],
            s0: vec![s0; n],
            corr,
        }
    }
}

/// Validated multi-asset model with its lower Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiGbm {
    params: MultiGbmParams,
    /// Row-major lower-triangular factor `L` with `L Lᵀ = corr`.
    factor: Vec<f64>,
}

impl MultiGbm {
    pub fn new(params: MultiGbmParams) -> Result<Self> {
        let n = params.s0.len();
        if n == 0 || params.sigma.len() != n || params.corr.len() != n {
            return Err(Error::Config(format!(
                "multi-asset model needs matching lengths (s0 {}, sigma {}, corr {})",
                n,
                params.sigma.len(),
                params.corr.len()
            )));
        }
        ensure_finite("r", params.r)?;
        for (&s, &v) in params.s0.iter().zip(&params.sigma) {
            ensure_positive("s0", s)?;
            ensure_non_negative("sigma", v)?;
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, row) in params.corr.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config("correlation matrix must be square".into()));
            }
            for (j, &c) in row.iter().enumerate() {
                ensure_finite("corr", c)?;
                m[(i, j)] = c;
            }
        }
        for i in 0..n {
            if (m[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter {
                    name: "corr",
                    value: m[(i, i)],
                    reason: "diagonal entries must be 1",
                });
            }
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter {
                        name: "corr",
                        value: m[(i, j)],
                        reason: "matrix must be symmetric",
                    });
                }
            }
        }
        let chol = m.cholesky().ok_or(Error::NotFactorizable)?;
        let l = chol.l();
        let mut factor = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                factor[i * n + j] = l[(i, j)];
            }
        }
        Ok(Self { params, factor })
    }

    pub fn params(&self) -> &MultiGbmParams {
        &self.params
    }

    pub fn assets(&self) -> usize {
        self.params.s0.len()
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }
}

/// The asset dynamics a trajectory is simulated under.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    BlackScholes(BsParams),
    Heston {
        params: HestonParams,
        scheme: HestonScheme,
    },
    MultiGbm(MultiGbm),
}

impl ModelSpec {
    pub fn black_scholes(r: f64, sigma: f64, s0: f64) -> Result<Self> {
        Ok(Self::BlackScholes(BsParams::new(r, sigma, s0)?))
    }

    pub fn heston(params: HestonParams, scheme: HestonScheme) -> Result<Self> {
        params.validate()?;
        Ok(Self::Heston { params, scheme })
    }

    pub fn multi_gbm(params: MultiGbmParams) -> Result<Self> {
        Ok(Self::MultiGbm(MultiGbm::new(params)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::BlackScholes(p) => p.validate(),
            Self::Heston { params, .. } => params.validate(),
            Self::MultiGbm(_) => Ok(()),
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            Self::BlackScholes(p) => p.r,
            Self::Heston { params, .. } => params.r,
            Self::MultiGbm(m) => m.params.r,
        }
    }

    pub fn assets(&self) -> usize {
        match self {
            Self::MultiGbm(m) => m.assets(),
            _ => 1,
        }
    }

    pub fn has_variance(&self) -> bool {
        matches!(self, Self::Heston { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BlackScholes(_) => "bs",
            Self::Heston { .. } => "heston",
            Self::MultiGbm(_) => "multi-gbm",
        }
    }
}

/// Uniform grid `t_i = i * T / m`, `i = 0..=m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    maturity: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(maturity: f64, steps: usize) -> Result<Self> {
        ensure_positive("maturity", maturity)?;
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
                reason: "need at least one step",
            });
        }
        Ok(Self { maturity, steps })
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.maturity
        } else {
            i as f64 * self.dt()
        }
    }

    /// Time left to maturity at index `i`.
    #[inline]
    pub fn remaining(&self, i: usize) -> f64 {
        if i >= self.steps {
            0.0
        } else {
            (self.steps - i) as f64 * self.dt()
        }
    }
}
