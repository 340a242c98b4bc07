use crate::error::{Error, Result};

use super::TimeGrid;

/// A simulated path on a fixed time grid.
///
/// Prices are stored step-major (`prices[i * assets + a]`). Running
/// statistics track the first asset and are kept per step so that scores and
/// payoffs can read them in O(1) at any index:
///
/// * `running_sum[i]` is the sum of prices at indices `1..=i` (zero at `i = 0`),
/// * `running_max[i]` / `running_min[i]` are the extrema over `0..=i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    assets: usize,
    prices: Vec<f64>,
    variances: Option<Vec<f64>>,
    running_sum: Vec<f64>,
    running_max: Vec<f64>,
    running_min: Vec<f64>,
}

impl Trajectory {
    /// Allocates a trajectory holding only its initial state.
    pub(crate) fn start(grid: TimeGrid, initial: &[f64], variance: Option<f64>) -> Self {
        let len = grid.steps() + 1;
        let assets = initial.len();
        let mut prices = vec![0.0; len * assets];
        prices[..assets].copy_from_slice(initial);
        let variances = variance.map(|v0| {
            let mut v = vec![0.0; len];
            v[0] = v0;
            v
        });
        let mut running_max = vec![0.0; len];
        let mut running_min = vec![0.0; len];
        running_max[0] = initial[0];
        running_min[0] = initial[0];
        Self {
            grid,
            assets,
            prices,
            variances,
            running_sum: vec![0.0; len],
            running_max,
            running_min,
        }
    }

    /// Builds a single-asset trajectory from explicit prices (`m + 1` values).
    pub fn from_prices(grid: TimeGrid, prices: &[f64]) -> Result<Self> {
        Self::from_multi_prices(grid, 1, prices)
    }

    /// Builds a trajectory from explicit step-major prices for `assets` assets.
    pub fn from_multi_prices(grid: TimeGrid, assets: usize, prices: &[f64]) -> Result<Self> {
        if assets == 0 || prices.len() != (grid.steps() + 1) * assets {
            return Err(Error::Mismatch(format!(
                "expected {} prices for {} asset(s) on {} steps, got {}",
                (grid.steps() + 1) * assets,
                assets,
                grid.steps(),
                prices.len()
            )));
        }
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "prices",
                value: prices.iter().copied().find(|p| !p.is_finite() || *p <= 0.0).unwrap_or(f64::NAN),
                reason: "prices must be finite and positive",
            });
        }
        let mut traj = Self::start(grid, &prices[..assets], None);
        traj.prices.copy_from_slice(prices);
        for i in 1..=grid.steps() {
            traj.record_stats(i);
        }
        Ok(traj)
    }

    /// Attaches a variance path (Heston-style trajectories built by hand).
    pub fn with_variances(mut self, variances: Vec<f64>) -> Result<Self> {
        if variances.len() != self.len() {
            return Err(Error::Mismatch("variance path length".into()));
        }
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "variances",
                value: f64::NAN,
                reason: "variances must be finite and non-negative",
            });
        }
        self.variances = Some(variances);
        Ok(self)
    }

    #[inline]
    pub(crate) fn record_stats(&mut self, i: usize) {
        let s = self.prices[i * self.assets];
        self.running_sum[i] = self.running_sum[i - 1] + s;
        self.running_max[i] = self.running_max[i - 1].max(s);
        self.running_min[i] = self.running_min[i - 1].min(s);
    }

    /// Re-initialises the index-0 statistics from the stored initial price.
    pub(crate) fn reset_stats(&mut self) {
        let s = self.prices[0];
        self.running_sum[0] = 0.0;
        self.running_max[0] = s;
        self.running_min[0] = s;
    }

    /// Overwrites indices `0..=index` with the corresponding part of `other`.
    pub(crate) fn copy_prefix_from(&mut self, other: &Trajectory, index: usize) {
        debug_assert_eq!(self.assets, other.assets);
        debug_assert_eq!(self.len(), other.len());
        let n = index + 1;
        self.grid = other.grid;
        self.prices[..n * self.assets].copy_from_slice(&other.prices[..n * other.assets]);
        match (&mut self.variances, &other.variances) {
            (Some(dst), Some(src)) => dst[..n].copy_from_slice(&src[..n]),
            (dst, src) => *dst = src.clone(),
        }
        self.running_sum[..n].copy_from_slice(&other.running_sum[..n]);
        self.running_max[..n].copy_from_slice(&other.running_max[..n]);
        self.running_min[..n].copy_from_slice(&other.running_min[..n]);
    }

    #[inline]
    pub(crate) fn prices_mut(&mut self) -> &mut [f64] {
        &mut self.prices
    }

    #[inline]
    pub(crate) fn variances_mut(&mut self) -> Option<&mut [f64]> {
        self.variances.as_deref_mut()
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// Number of stored states, `m + 1`.
    pub fn len(&self) -> usize {
        self.grid.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    /// Price of the first asset at grid index `i`.
    #[inline]
    pub fn price(&self, i: usize) -> f64 {
        self.prices[i * self.assets]
    }

    #[inline]
    pub fn price_of(&self, i: usize, asset: usize) -> f64 {
        self.prices[i * self.assets + asset]
    }

    /// All asset prices at grid index `i`.
    #[inline]
    pub fn prices_at(&self, i: usize) -> &[f64] {
        &self.prices[i * self.assets..(i + 1) * self.assets]
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn terminal(&self) -> f64 {
        self.price(self.steps())
    }

    pub fn terminal_prices(&self) -> &[f64] {
        self.prices_at(self.steps())
    }

    pub fn variance(&self, i: usize) -> Option<f64> {
        self.variances.as_ref().map(|v| v[i])
    }

    pub fn variances(&self) -> Option<&[f64]> {
        self.variances.as_deref()
    }

    #[inline]
    pub fn running_sum(&self, i: usize) -> f64 {
        self.running_sum[i]
    }

    #[inline]
    pub fn running_max(&self, i: usize) -> f64 {
        self.running_max[i]
    }

    #[inline]
    pub fn running_min(&self, i: usize) -> f64 {
        self.running_min[i]
    }

    /// Arithmetic mean of the observations at indices `1..=i`; the initial
    /// price when `i = 0`.
    #[inline]
    pub fn running_average(&self, i: usize) -> f64 {
        if i == 0 {
            self.price(0)
        } else {
            self.running_sum[i] / i as f64
        }
    }

    pub fn running_max_slice(&self) -> &[f64] {
        &self.running_max
    }

    pub fn running_min_slice(&self) -> &[f64] {
        &self.running_min
    }
}
