//! One-step transition schemes.
//!
//! Each scheme has a draw-explicit core (used by the path simulator, the
//! antithetic pairing and the multilevel coupling) and a checked public
//! entry point that pulls its draws from an [`RngStream`].

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::rng::RngStream;

use super::{BsParams, HestonParams};

/// Moment-ratio threshold separating the quadratic and exponential regimes.
pub const QE_SWITCH_THRESHOLD: f64 = 1.5;

/// Central weights for the integrated variance in the log-price update.
const GAMMA_1: f64 = 0.5;
const GAMMA_2: f64 = 0.5;

/// Exact log-normal step: `s * exp((r - sigma^2/2) dt + sigma dw)`, where
/// `dw` is the Brownian increment over `dt`.
pub fn step_bs_exact(s: f64, p: &BsParams, dt: f64, dw: f64) -> Result<f64> {
    ensure_positive("s", s)?;
    ensure_positive("dt", dt)?;
    ensure_finite("dw", dw)?;
    p.validate()?;
    Ok(s * ((p.r - 0.5 * p.sigma * p.sigma) * dt + p.sigma * dw).exp())
}

/// Conditional moments of `V(t + dt) | V(t) = v` for the CIR variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QeMoments {
    pub mean: f64,
    pub variance: f64,
    /// `variance / mean^2`, the regime selector.
    pub psi: f64,
}

pub fn qe_moments(v: f64, p: &HestonParams, dt: f64) -> QeMoments {
    let e = (-p.kappa * dt).exp();
    let mean = p.theta + (v - p.theta) * e;
    let variance = v * p.vol_of_vol.powi(2) * e * (1.0 - e) / p.kappa
        + p.theta * p.vol_of_vol.powi(2) * (1.0 - e).powi(2) / (2.0 * p.kappa);
    QeMoments {
        mean,
        variance,
        psi: variance / (mean * mean),
    }
}

/// Precomputed quadratic-exponential constants for a fixed `(params, dt)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QeCoefficients {
    exp_kdt: f64,
    theta: f64,
    s2_from_v: f64,
    s2_const: f64,
    r_dt: f64,
    k0: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
}

impl QeCoefficients {
    pub fn new(p: &HestonParams, dt: f64) -> Result<Self> {
        p.validate()?;
        ensure_positive("dt", dt)?;
        if p.vol_of_vol <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "vol_of_vol",
                value: p.vol_of_vol,
                reason: "quadratic-exponential scheme needs positive vol-of-vol",
            });
        }
        let e = (-p.kappa * dt).exp();
        let xi2 = p.vol_of_vol * p.vol_of_vol;
        let rho_xi = p.rho / p.vol_of_vol;
        let a = p.kappa * rho_xi - 0.5;
        Ok(Self {
            exp_kdt: e,
            theta: p.theta,
            s2_from_v: xi2 * e * (1.0 - e) / p.kappa,
            s2_const: p.theta * xi2 * (1.0 - e).powi(2) / (2.0 * p.kappa),
            r_dt: p.r * dt,
            k0: -rho_xi * p.kappa * p.theta * dt,
            k1: GAMMA_1 * dt * a - rho_xi,
            k2: GAMMA_2 * dt * a + rho_xi,
            k3: GAMMA_1 * dt * (1.0 - p.rho * p.rho),
            k4: GAMMA_2 * dt * (1.0 - p.rho * p.rho),
        })
    }

    /// Variance update from a standard normal `z` (quadratic regime) or a
    /// uniform `u` (exponential regime). Only the draw of the active regime
    /// is used.
    #[inline]
    pub fn variance_update(&self, v: f64, z: f64, u: f64) -> f64 {
        let m = self.theta + (v - self.theta) * self.exp_kdt;
        let s2 = v * self.s2_from_v + self.s2_const;
        let psi = s2 / (m * m);
        if psi <= QE_SWITCH_THRESHOLD {
            let inv = 2.0 / psi;
            let b2 = inv - 1.0 + (inv * (inv - 1.0)).sqrt();
            let a = m / (1.0 + b2);
            let b = b2.sqrt();
            a * (b + z) * (b + z)
        } else {
            let p = (psi - 1.0) / (psi + 1.0);
            if u <= p {
                0.0
            } else {
                let beta = (1.0 - p) / m;
                ((1.0 - p) / (1.0 - u)).ln() / beta
            }
        }
    }

    /// Log-price update given the variance at both ends of the step.
    #[inline]
    pub fn price_update(&self, s: f64, v: f64, v_next: f64, eps: f64) -> f64 {
        let var = (self.k3 * v + self.k4 * v_next).max(0.0);
        s * (self.r_dt + self.k0 + self.k1 * v + self.k2 * v_next + var.sqrt() * eps).exp()
    }
}

/// Full-truncation Euler / Milstein core. `z_var` drives the variance and
/// `z_indep` is mixed in for the price so that the pair has correlation rho.
#[inline]
pub(crate) fn heston_euler_core(
    s: f64,
    v: f64,
    p: &HestonParams,
    dt: f64,
    z_var: f64,
    z_indep: f64,
    milstein: bool,
) -> (f64, f64) {
    let vp = v.max(0.0);
    let z_price = p.rho * z_var + (1.0 - p.rho * p.rho).sqrt() * z_indep;
    let sd = (vp * dt).sqrt();
    let s_next = s * ((p.r - 0.5 * vp) * dt + sd * z_price).exp();
    let mut v_next = v + p.kappa * (p.theta - vp) * dt + p.vol_of_vol * sd * z_var;
    if milstein {
        v_next += 0.25 * p.vol_of_vol * p.vol_of_vol * dt * (z_var * z_var - 1.0);
    }
    (s_next, v_next.max(0.0))
}

fn check_heston_state(s: f64, v: f64, p: &HestonParams, dt: f64) -> Result<()> {
    ensure_positive("s", s)?;
    ensure_non_negative("v", v)?;
    ensure_positive("dt", dt)?;
    p.validate()
}

/// One quadratic-exponential step. Draws, in order: the quadratic-regime
/// normal, the exponential-regime uniform, and the price normal.
pub fn step_heston_qe(
    s: f64,
    v: f64,
    p: &HestonParams,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    check_heston_state(s, v, p, dt)?;
    let c = QeCoefficients::new(p, dt)?;
    let z = rng.gaussian();
    let u = rng.uniform();
    let eps = rng.gaussian();
    let v_next = c.variance_update(v, z, u);
    Ok((c.price_update(s, v, v_next, eps), v_next))
}

/// One full-truncation Euler step (log-Euler for the price).
pub fn step_heston_euler(
    s: f64,
    v: f64,
    p: &HestonParams,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    check_heston_state(s, v, p, dt)?;
    let z_var = rng.gaussian();
    let z_indep = rng.gaussian();
    Ok(heston_euler_core(s, v, p, dt, z_var, z_indep, false))
}

/// Euler step plus the Milstein correction on the variance equation.
pub fn step_heston_milstein(
    s: f64,
    v: f64,
    p: &HestonParams,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    check_heston_state(s, v, p, dt)?;
    let z_var = rng.gaussian();
    let z_indep = rng.gaussian();
    Ok(heston_euler_core(s, v, p, dt, z_var, z_indep, true))
}
