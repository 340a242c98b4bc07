use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::steppers::{heston_euler_core, QeCoefficients};
use super::{HestonParams, HestonScheme, ModelSpec, MultiGbm, TimeGrid, Trajectory};

/// Kind of variate consumed at one position of a step's draw vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrawKind {
    Gaussian,
    Uniform,
}

/// Source of per-step variates. Implemented by [`RngStream`] and by replay
/// buffers used for coupled (multilevel) simulation.
pub(crate) trait DrawSource {
    fn gaussian(&mut self) -> f64;
    fn uniform(&mut self) -> f64;
}

impl DrawSource for RngStream {
    #[inline]
    fn gaussian(&mut self) -> f64 {
        RngStream::gaussian(self)
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        RngStream::uniform(self)
    }
}

/// Replays a recorded draw sequence in order.
pub(crate) struct Replay<'a> {
    draws: &'a [f64],
    pos: usize,
}

impl<'a> Replay<'a> {
    pub(crate) fn new(draws: &'a [f64]) -> Self {
        Self { draws, pos: 0 }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let x = self.draws[self.pos];
        self.pos += 1;
        x
    }
}

impl DrawSource for Replay<'_> {
    #[inline]
    fn gaussian(&mut self) -> f64 {
        self.next()
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        self.next()
    }
}

/// Wraps a source and records every draw it hands out.
pub(crate) struct Recorder<'a, S> {
    inner: &'a mut S,
    pub(crate) draws: Vec<f64>,
}

impl<'a, S: DrawSource> Recorder<'a, S> {
    pub(crate) fn new(inner: &'a mut S, capacity: usize) -> Self {
        Self {
            inner,
            draws: Vec::with_capacity(capacity),
        }
    }
}

impl<S: DrawSource> DrawSource for Recorder<'_, S> {
    #[inline]
    fn gaussian(&mut self) -> f64 {
        let x = self.inner.gaussian();
        self.draws.push(x);
        x
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        let x = self.inner.uniform();
        self.draws.push(x);
        x
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Bs {
        drift: f64,
        vol: f64,
    },
    Qe(QeCoefficients),
    Euler {
        params: HestonParams,
        dt: f64,
        milstein: bool,
    },
    Multi {
        drift: Vec<f64>,
        vol: Vec<f64>,
        factor: Vec<f64>,
    },
}

/// Path generator for one model on one grid, with precomputed step
/// constants.
#[derive(Clone, Debug)]
pub struct Simulator {
    kernel: Kernel,
    grid: TimeGrid,
    initial: Vec<f64>,
    v0: Option<f64>,
}

impl Simulator {
    pub fn new(model: &ModelSpec, grid: TimeGrid) -> Result<Self> {
        model.validate()?;
        let dt = grid.dt();
        let (kernel, initial, v0) = match model {
            ModelSpec::BlackScholes(p) => (
                Kernel::Bs {
                    drift: (p.r - 0.5 * p.sigma * p.sigma) * dt,
                    vol: p.sigma * dt.sqrt(),
                },
                vec![p.s0],
                None,
            ),
            ModelSpec::Heston { params, scheme } => {
                let kernel = match scheme {
                    HestonScheme::QuadraticExponential => {
                        Kernel::Qe(QeCoefficients::new(params, dt)?)
                    }
                    HestonScheme::Euler | HestonScheme::Milstein => Kernel::Euler {
                        params: *params,
                        dt,
                        milstein: *scheme == HestonScheme::Milstein,
                    },
                };
                (kernel, vec![params.s0], Some(params.v0))
            }
            ModelSpec::MultiGbm(m) => (multi_kernel(m, dt), m.params().s0.clone(), None),
        };
        Ok(Self {
            kernel,
            grid,
            initial,
            v0,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn assets(&self) -> usize {
        self.initial.len()
    }

    /// Variates consumed by one step, in draw order.
    pub fn draw_kinds(&self) -> Vec<DrawKind> {
        match &self.kernel {
            Kernel::Bs { .. } => vec![DrawKind::Gaussian],
            Kernel::Qe(_) => vec![DrawKind::Gaussian, DrawKind::Uniform, DrawKind::Gaussian],
            Kernel::Euler { .. } => vec![DrawKind::Gaussian, DrawKind::Gaussian],
            Kernel::Multi { drift, .. } => vec![DrawKind::Gaussian; drift.len()],
        }
    }

    /// A trajectory holding only the initial state.
    pub fn initial_trajectory(&self) -> Trajectory {
        Trajectory::start(self.grid, &self.initial, self.v0)
    }

    /// Simulates a full path. Adds `m * assets` to `work`.
    pub fn simulate(&self, rng: &mut RngStream, work: &mut u64) -> Trajectory {
        let mut traj = self.initial_trajectory();
        *work += self.advance(&mut traj, 0, rng);
        traj
    }

    /// Regenerates `traj` (which must come from this simulator) from index 0.
    pub fn simulate_into(&self, traj: &mut Trajectory, rng: &mut RngStream) -> u64 {
        self.advance(traj, 0, rng)
    }

    /// Keeps indices `0..=from` of `traj` and regenerates the rest from
    /// `rng`. Returns the work spent.
    pub fn resume_in_place(
        &self,
        traj: &mut Trajectory,
        from: usize,
        rng: &mut RngStream,
    ) -> Result<u64> {
        self.check_compatible(traj)?;
        if from > self.grid.steps() {
            return Err(Error::IndexOutOfRange {
                index: from,
                steps: self.grid.steps(),
            });
        }
        Ok(self.advance(traj, from, rng))
    }

    /// Copy of `base` regenerated after index `from`.
    pub fn resume(
        &self,
        base: &Trajectory,
        from: usize,
        rng: &mut RngStream,
        work: &mut u64,
    ) -> Result<Trajectory> {
        let mut traj = base.clone();
        *work += self.resume_in_place(&mut traj, from, rng)?;
        Ok(traj)
    }

    fn check_compatible(&self, traj: &Trajectory) -> Result<()> {
        if traj.grid() != self.grid
            || traj.assets() != self.assets()
            || traj.variances().is_some() != self.v0.is_some()
        {
            return Err(Error::Mismatch(
                "trajectory was not produced by this model and grid".into(),
            ));
        }
        Ok(())
    }

    /// Core stepping loop: fills indices `from + 1..=m`.
    pub(crate) fn advance<S: DrawSource>(
        &self,
        traj: &mut Trajectory,
        from: usize,
        src: &mut S,
    ) -> u64 {
        let m = self.grid.steps();
        if from == 0 {
            // Restore the initial state in case the buffer is being reused.
            let n = self.initial.len();
            traj.prices_mut()[..n].copy_from_slice(&self.initial);
            if let (Some(v), Some(v0)) = (traj.variances_mut(), self.v0) {
                v[0] = v0;
            }
            traj.reset_stats();
        }
        match &self.kernel {
            Kernel::Bs { drift, vol } => {
                for i in from..m {
                    let z = src.gaussian();
                    let prices = traj.prices_mut();
                    prices[i + 1] = prices[i] * (drift + vol * z).exp();
                    traj.record_stats(i + 1);
                }
            }
            Kernel::Qe(c) => {
                for i in from..m {
                    let z = src.gaussian();
                    let u = src.uniform();
                    let eps = src.gaussian();
                    let vars = traj.variances_mut().expect("heston trajectory has variances");
                    let v = vars[i];
                    let v_next = c.variance_update(v, z, u);
                    vars[i + 1] = v_next;
                    let prices = traj.prices_mut();
                    prices[i + 1] = c.price_update(prices[i], v, v_next, eps);
                    traj.record_stats(i + 1);
                }
            }
            Kernel::Euler {
                params,
                dt,
                milstein,
            } => {
                for i in from..m {
                    let z_var = src.gaussian();
                    let z_indep = src.gaussian();
                    let vars = traj.variances_mut().expect("heston trajectory has variances");
                    let v = vars[i];
                    let s = traj.price(i);
                    let (s1, v1) = heston_euler_core(s, v, params, *dt, z_var, z_indep, *milstein);
                    traj.variances_mut().expect("variances")[i + 1] = v1;
                    traj.prices_mut()[i + 1] = s1;
                    traj.record_stats(i + 1);
                }
            }
            Kernel::Multi { drift, vol, factor } => {
                let n = drift.len();
                let mut z = vec![0.0; n];
                for i in from..m {
                    for zk in z.iter_mut() {
                        *zk = src.gaussian();
                    }
                    let prices = traj.prices_mut();
                    for a in 0..n {
                        let w: f64 = (0..=a).map(|k| factor[a * n + k] * z[k]).sum();
                        prices[(i + 1) * n + a] = prices[i * n + a] * (drift[a] + vol[a] * w).exp();
                    }
                    traj.record_stats(i + 1);
                }
            }
        }
        ((m - from) * self.assets()) as u64
    }
}

fn multi_kernel(m: &MultiGbm, dt: f64) -> Kernel {
    let p = m.params();
    Kernel::Multi {
        drift: p.sigma.iter().map(|s| (p.r - 0.5 * s * s) * dt).collect(),
        vol: p.sigma.iter().map(|s| s * dt.sqrt()).collect(),
        factor: m.factor().to_vec(),
    }
}

/// Simulates one trajectory (all `m + 1` states) and adds `m * assets` to
/// `work`.
pub fn simulate_path(
    model: &ModelSpec,
    grid: TimeGrid,
    rng: &mut RngStream,
    work: &mut u64,
) -> Result<Trajectory> {
    Ok(Simulator::new(model, grid)?.simulate(rng, work))
}

/// Returns a trajectory equal to `base` on `0..=from_index` and freshly
/// simulated afterwards. Adds `(m - from_index) * assets` to `work`.
pub fn resume_path(
    base: &Trajectory,
    from_index: usize,
    model: &ModelSpec,
    rng: &mut RngStream,
    work: &mut u64,
) -> Result<Trajectory> {
    Simulator::new(model, base.grid())?.resume(base, from_index, rng, work)
}

/// Correlated multi-asset path.
pub fn simulate_multi_path(
    model: &MultiGbm,
    grid: TimeGrid,
    rng: &mut RngStream,
    work: &mut u64,
) -> Result<Trajectory> {
    simulate_path(&ModelSpec::MultiGbm(model.clone()), grid, rng, work)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BsParams, MultiGbmParams};
    use crate::rng::StreamId;

    fn bs() -> ModelSpec {
        ModelSpec::BlackScholes(BsParams::new(0.03, 0.2, 1.0).unwrap())
    }

    fn heston(scheme: HestonScheme) -> ModelSpec {
        ModelSpec::heston(
            HestonParams {
                r: 0.03,
                kappa: 2.0,
                theta: 0.04,
                vol_of_vol: 0.3,
                rho: -0.5,
                v0: 0.04,
                s0: 1.0,
            },
            scheme,
        )
        .unwrap()
    }

    #[test]
    fn single_step_zero_draw() {
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let sim = Simulator::new(&bs(), grid).unwrap();
        let mut traj = sim.initial_trajectory();
        let zeros = [0.0];
        let work = sim.advance(&mut traj, 0, &mut Replay::new(&zeros));
        assert_eq!(work, 1);
        assert_eq!(traj.price(0), 1.0);
        assert!((traj.price(1) - 0.01f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn reproducible_and_counts_work() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        for model in [bs(), heston(HestonScheme::QuadraticExponential), heston(HestonScheme::Euler)] {
            let id = StreamId::new(1, 2, 3, 4);
            let mut w = 0;
            let a = simulate_path(&model, grid, &mut RngStream::new(id), &mut w).unwrap();
            let b = simulate_path(&model, grid, &mut RngStream::new(id), &mut w).unwrap();
            assert_eq!(a, b);
            assert_eq!(w, 100);
            assert_eq!(a.len(), 51);
            assert!(a.prices().iter().all(|&s| s > 0.0));
            if let Some(v) = a.variances() {
                assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn resume_edge_indices() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let model = heston(HestonScheme::QuadraticExponential);
        let mut w = 0;
        let base = simulate_path(&model, grid, &mut RngStream::new(StreamId::new(0, 0, 0, 0)), &mut w).unwrap();
        let mut w2 = 0;
        let same = resume_path(&base, 20, &model, &mut RngStream::new(StreamId::new(0, 0, 0, 1)), &mut w2).unwrap();
        assert_eq!(same, base);
        assert_eq!(w2, 0);
        let fresh = resume_path(&base, 0, &model, &mut RngStream::new(StreamId::new(0, 0, 0, 1)), &mut w2).unwrap();
        assert_eq!(w2, 20);
        assert_eq!(fresh.price(0), base.price(0));
        assert_eq!(fresh.variance(0), base.variance(0));
        assert_ne!(fresh.price(1), base.price(1));
        assert!(matches!(
            resume_path(&base, 21, &model, &mut RngStream::new(StreamId::new(0, 0, 0, 1)), &mut w2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn resume_rejects_foreign_trajectory() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let mut w = 0;
        let base = simulate_path(&bs(), grid, &mut RngStream::new(StreamId::new(0, 0, 0, 0)), &mut w).unwrap();
        let heston = Simulator::new(&heston(HestonScheme::Euler), grid).unwrap();
        let mut t = base.clone();
        assert!(heston.resume_in_place(&mut t, 3, &mut RngStream::new(StreamId::new(0, 0, 0, 1))).is_err());
    }

    #[test]
    fn multi_asset_identity_correlation_is_independent() {
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let mut params = MultiGbmParams::uniform(3, 0.03, 0.2, 1.0, 0.0);
        params.sigma[2] = 0.3;
        let model = MultiGbm::new(params).unwrap();
        let mut rng = RngStream::new(StreamId::new(8, 0, 0, 0));
        let n = 40_000;
        let mut r = vec![Vec::with_capacity(n); 3];
        let mut w = 0;
        for _ in 0..n {
            let t = simulate_multi_path(&model, grid, &mut rng, &mut w).unwrap();
            for (a, col) in r.iter_mut().enumerate() {
                col.push(t.price_of(1, a).ln());
            }
        }
        assert_eq!(w, 3 * n as u64);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let c = corr(&r[i], &r[j]);
            assert!(c.abs() < 3.0 / (n as f64).sqrt(), "corr({i},{j}) = {c}");
        }
    }

    fn corr(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }
}
