//! Path simulation for continuous (sub)martingales on a uniform grid.
//!
//! Every path draws its randomness from its own ChaCha8 stream keyed by
//! `(seed, path index)`, so a batch is a pure function of its [`SimConfig`]
//! no matter how the work is scheduled across threads.
//!
//! Between grid points the maximum is sampled exactly from the Brownian
//! bridge law (see [`bridge_max`]), which removes the `O(sqrt(dt))` low bias
//! of the naive grid maximum. For the geometric model the bridge is applied
//! to the log-price, where it is exact. For `|B|` the segment maximum is the
//! larger of bridge maxima of `B` and `-B` drawn independently; this is an
//! approximation on segments where `B` crosses zero.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{self, MomentEstimate, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("sigma must be finite and > 0, got {0}")]
    InvalidSigma(f64),
    #[error("horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),
    #[error("n_steps must be >= 1")]
    NoSteps,
    #[error("n_paths must be >= 1")]
    NoPaths,
    #[error("x0 must be finite, got {0}")]
    NonFiniteStart(f64),
    #[error("{model} requires x0 >= 0, got {x0}")]
    NegativeStart { model: Model, x0: f64 },
    #[error("n_steps * n_paths overflows ({n_steps} * {n_paths})")]
    TooLarge { n_steps: usize, n_paths: usize },
}

/// Process family to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `x0 + sigma * B_t`; a signed martingale.
    BrownianMotion,
    /// `x0 * exp(sigma * B_t - sigma^2 t / 2)`; a nonnegative martingale.
    GbmMartingale,
    /// `|x0 + sigma * B_t|`; a nonnegative submartingale.
    AbsBrownian,
}

impl Model {
    pub fn is_martingale(self) -> bool {
        !matches!(self, Model::AbsBrownian)
    }

    /// True when every path is nonnegative by construction, whatever `x0`.
    pub fn is_nonnegative(self) -> bool {
        !matches!(self, Model::BrownianMotion)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Model::BrownianMotion => "bm",
            Model::GbmMartingale => "gbm",
            Model::AbsBrownian => "absbm",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: Model,
    pub x0: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl SimConfig {
    pub const DEFAULT_STEPS: usize = 1024;
    pub const DEFAULT_PATHS: usize = 100_000;
    pub const DEFAULT_SEED: u64 = 42;

    /// Config with desk defaults: 1024 steps, 10^5 paths, seed 42, bridge on.
    pub fn new(model: Model, x0: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            model,
            x0,
            sigma,
            horizon,
            n_steps: Self::DEFAULT_STEPS,
            n_paths: Self::DEFAULT_PATHS,
            seed: Self::DEFAULT_SEED,
            bridge_correction: true,
        }
    }

    pub fn steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn bridge(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(SimError::InvalidSigma(self.sigma));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SimError::InvalidHorizon(self.horizon));
        }
        if self.n_steps == 0 {
            return Err(SimError::NoSteps);
        }
        if self.n_paths == 0 {
            return Err(SimError::NoPaths);
        }
        if !self.x0.is_finite() {
            return Err(SimError::NonFiniteStart(self.x0));
        }
        if self.model.is_nonnegative() && self.x0 < 0.0 {
            return Err(SimError::NegativeStart {
                model: self.model,
                x0: self.x0,
            });
        }
        // grid has n_steps + 1 points per path
        let fits = self
            .n_steps
            .checked_add(1)
            .and_then(|k| k.checked_mul(self.n_paths))
            .is_some();
        if !fits {
            return Err(SimError::TooLarge {
                n_steps: self.n_steps,
                n_paths: self.n_paths,
            });
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_steps;
        (0..=n)
            .map(|i| if i == n { self.horizon } else { self.horizon * i as f64 / n as f64 })
            .collect()
    }
}

/// One exact draw of the maximum of a Brownian bridge from `a` to `b` over a
/// span `dt` with volatility `sigma`, by inverting
/// `P(max <= m) = 1 - exp(-2 (m - a)(m - b) / (sigma^2 dt))`.
///
/// `u` must lie strictly inside `(0, 1)`. The result is always `>= max(a, b)`.
#[inline]
pub fn bridge_max(a: f64, b: f64, dt: f64, sigma: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0, "u must be in (0, 1), got {u}");
    debug_assert!(dt > 0.0 && sigma > 0.0);
    let d = b - a;
    let m = 0.5 * (a + b + (d * d - 2.0 * sigma * sigma * dt * u.ln()).sqrt());
    // rounding can put m an ulp below the endpoint when ln(u) is tiny
    m.max(a).max(b)
}

/// Random stream for a single path.
pub(crate) fn path_rng(seed: u64, path_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id as u64);
    rng
}

/// One grid interval `[t_i, t_{i+1}]` seen during path generation.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub index: usize,
    pub x_start: f64,
    pub x_end: f64,
    /// Running maximum through `t_i` (bridge corrected when enabled).
    pub max_start: f64,
    /// Running maximum through `t_{i+1}`.
    pub max_end: f64,
    /// Maximum over grid values `X_{t_0..=t_{i+1}}`.
    pub grid_max_end: f64,
}

#[derive(Debug, Clone, Copy)]
struct PathSummary {
    terminal: f64,
    maximum: f64,
    grid_maximum: f64,
}

/// Generates path `path_id` of `cfg`, calling `on_step` for every interval.
/// All per-step randomness is drawn whether or not the bridge is enabled, so
/// toggling the correction leaves the grid values untouched.
fn walk_path<F: FnMut(&Step)>(cfg: &SimConfig, path_id: usize, mut on_step: F) -> PathSummary {
    let mut rng = path_rng(cfg.seed, path_id);
    let dt = cfg.dt();
    let sigma = cfg.sigma;
    let vol = sigma * dt.sqrt();
    let bridge = cfg.bridge_correction;

    match cfg.model {
        Model::BrownianMotion => {
            let mut x = cfg.x0;
            let mut max = x;
            let mut grid_max = x;
            for index in 0..cfg.n_steps {
                let z: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.sample(Open01);
                let next = x + vol * z;
                let seg = if bridge { bridge_max(x, next, dt, sigma, u) } else { next };
                let max_start = max;
                max = max.max(seg);
                grid_max = grid_max.max(next);
                on_step(&Step {
                    index,
                    x_start: x,
                    x_end: next,
                    max_start,
                    max_end: max,
                    grid_max_end: grid_max,
                });
                x = next;
            }
            PathSummary {
                terminal: x,
                maximum: max,
                grid_maximum: grid_max,
            }
        }
        Model::GbmMartingale => {
            let x0 = cfg.x0;
            let drift = -0.5 * sigma * sigma * dt;
            let mut log = 0.0_f64;
            let mut max_log = 0.0_f64;
            let mut grid_max_log = 0.0_f64;
            for index in 0..cfg.n_steps {
                let z: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.sample(Open01);
                let next = log + drift + vol * z;
                let seg = if bridge { bridge_max(log, next, dt, sigma, u) } else { next };
                let max_start = max_log;
                max_log = max_log.max(seg);
                grid_max_log = grid_max_log.max(next);
                on_step(&Step {
                    index,
                    x_start: x0 * log.exp(),
                    x_end: x0 * next.exp(),
                    max_start: x0 * max_start.exp(),
                    max_end: x0 * max_log.exp(),
                    grid_max_end: x0 * grid_max_log.exp(),
                });
                log = next;
            }
            PathSummary {
                terminal: x0 * log.exp(),
                maximum: x0 * max_log.exp(),
                grid_maximum: x0 * grid_max_log.exp(),
            }
        }
        Model::AbsBrownian => {
            let mut b = cfg.x0;
            let mut max = b.abs();
            let mut grid_max = max;
            for index in 0..cfg.n_steps {
                let z: f64 = rng.sample(StandardNormal);
                let u_up: f64 = rng.sample(Open01);
                let u_down: f64 = rng.sample(Open01);
                let next = b + vol * z;
                let seg = if bridge {
                    let up = bridge_max(b, next, dt, sigma, u_up);
                    let down = bridge_max(-b, -next, dt, sigma, u_down);
                    up.max(down)
                } else {
                    next.abs()
                };
                let max_start = max;
                max = max.max(seg);
                grid_max = grid_max.max(next.abs());
                on_step(&Step {
                    index,
                    x_start: b.abs(),
                    x_end: next.abs(),
                    max_start,
                    max_end: max,
                    grid_max_end: grid_max,
                });
                b = next;
            }
            PathSummary {
                terminal: b.abs(),
                maximum: max,
                grid_maximum: grid_max,
            }
        }
    }
}

/// Terminal values and maxima of a simulated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    config: SimConfig,
    grid: Vec<f64>,
    terminal: Vec<f64>,
    maximum: Vec<f64>,
    grid_maximum: Vec<f64>,
}

/// Per-path values handed to functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathView {
    pub index: usize,
    pub x0: f64,
    pub terminal: f64,
    pub maximum: f64,
    pub grid_maximum: f64,
}

impl PathBatch {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn model(&self) -> Model {
        self.config.model
    }

    /// `X_0`, which is also `M_0`.
    pub fn x0(&self) -> f64 {
        match self.config.model {
            Model::AbsBrownian => self.config.x0.abs(),
            _ => self.config.x0,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn terminal(&self) -> &[f64] {
        &self.terminal
    }

    /// Continuous-time maximum estimate `M_T` (bridge corrected when enabled).
    pub fn maximum(&self) -> &[f64] {
        &self.maximum
    }

    /// Maximum over grid values only.
    pub fn grid_maximum(&self) -> &[f64] {
        &self.grid_maximum
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    pub fn view(&self, index: usize) -> PathView {
        PathView {
            index,
            x0: self.x0(),
            terminal: self.terminal[index],
            maximum: self.maximum[index],
            grid_maximum: self.grid_maximum[index],
        }
    }

    pub fn views(&self) -> impl ExactSizeIterator<Item = PathView> + '_ {
        (0..self.len()).map(move |i| self.view(i))
    }

    /// The same paths with the naive grid maximum in place of the bridge
    /// corrected one; identical to re-simulating with the correction off.
    pub fn uncorrected(&self) -> PathBatch {
        PathBatch {
            config: self.config.clone().bridge(false),
            grid: self.grid.clone(),
            terminal: self.terminal.clone(),
            maximum: self.grid_maximum.clone(),
            grid_maximum: self.grid_maximum.clone(),
        }
    }

    /// Writes `path_id,terminal,maximum` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "path_id,terminal,maximum")?;
        for (i, (x, m)) in self.terminal.iter().zip(&self.maximum).enumerate() {
            writeln!(out, "{i},{x:?},{m:?}")?;
        }
        Ok(())
    }

    /// Regenerates every path and sums `integrand` over its steps.
    pub fn step_sums<G>(&self, integrand: G) -> Vec<f64>
    where
        G: Fn(&Step) -> f64 + Sync,
    {
        let cfg = &self.config;
        (0..self.len())
            .into_par_iter()
            .map(|id| {
                let mut acc = stats::Neumaier::default();
                walk_path(cfg, id, |s| acc.add(integrand(s)));
                acc.total()
            })
            .collect()
    }
}

pub fn simulate_paths(config: &SimConfig) -> Result<PathBatch, SimError> {
    config.validate()?;
    let summaries: Vec<PathSummary> = (0..config.n_paths)
        .into_par_iter()
        .map(|id| walk_path(config, id, |_| {}))
        .collect();
    let mut terminal = Vec::with_capacity(summaries.len());
    let mut maximum = Vec::with_capacity(summaries.len());
    let mut grid_maximum = Vec::with_capacity(summaries.len());
    for s in summaries {
        terminal.push(s.terminal);
        maximum.push(s.maximum);
        grid_maximum.push(s.grid_maximum);
    }
    Ok(PathBatch {
        config: config.clone(),
        grid: config.grid(),
        terminal,
        maximum,
        grid_maximum,
    })
}

/// Full trajectory of one path, mainly for inspection and invariant tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub values: Vec<f64>,
    /// Running maximum at each grid time, including the bridge correction.
    pub running_max: Vec<f64>,
    /// Running maximum over grid values only.
    pub grid_running_max: Vec<f64>,
}

pub fn sample_path(config: &SimConfig, path_id: usize) -> Result<PathTrace, SimError> {
    config.validate()?;
    let n = config.n_steps + 1;
    let start = match config.model {
        Model::AbsBrownian => config.x0.abs(),
        _ => config.x0,
    };
    let mut trace = PathTrace {
        values: Vec::with_capacity(n),
        running_max: Vec::with_capacity(n),
        grid_running_max: Vec::with_capacity(n),
    };
    trace.values.push(start);
    trace.running_max.push(start);
    trace.grid_running_max.push(start);
    walk_path(config, path_id, |s| {
        trace.values.push(s.x_end);
        trace.running_max.push(s.max_end);
        trace.grid_running_max.push(s.grid_max_end);
    });
    Ok(trace)
}

fn abs_pow(x: f64, e: f64) -> f64 {
    crate::pow(x.abs(), e)
}

/// Monte Carlo mean of `sum_i M_{t_i}^{2p} (X_{t_{i+1}} - X_{t_i})^2`, the
/// discrete version of the integrability condition `int M^{2p} d[X,X]`.
pub fn qv_integral(batch: &PathBatch, p: f64) -> Result<MomentEstimate, StatsError> {
    let e = 2.0 * p;
    let sums = batch.step_sums(|s| {
        let dx = s.x_end - s.x_start;
        abs_pow(s.max_start, e) * dx * dx
    });
    MomentEstimate::from_samples(format!("qv_integral(p={p})"), &sums)
}

/// Monte Carlo mean of the discrete stochastic integral
/// `sum_i M_{t_i}^p (X_{t_{i+1}} - X_{t_i})`. Zero in expectation for
/// martingales, nonnegative for submartingales.
pub fn max_weighted_integral(batch: &PathBatch, p: f64) -> Result<MomentEstimate, StatsError> {
    let sums = batch.step_sums(|s| abs_pow(s.max_start, p) * (s.x_end - s.x_start));
    MomentEstimate::from_samples(format!("max_weighted_integral(p={p})"), &sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(model: Model, x0: f64) -> SimConfig {
        SimConfig::new(model, x0, 1.0, 1.0).steps(64).paths(200)
    }

    #[test]
    fn rejects_bad_configs() {
        let base = small(Model::GbmMartingale, 1.0);
        let mut c = base.clone();
        c.sigma = 0.0;
        assert_eq!(c.validate(), Err(SimError::InvalidSigma(0.0)));
        c = base.clone();
        c.sigma = -1.0;
        assert!(simulate_paths(&c).is_err());
        c = base.clone();
        c.horizon = 0.0;
        assert_eq!(c.validate(), Err(SimError::InvalidHorizon(0.0)));
        assert_eq!(base.clone().steps(0).validate(), Err(SimError::NoSteps));
        assert_eq!(base.clone().paths(0).validate(), Err(SimError::NoPaths));
        c = base.clone();
        c.x0 = -0.5;
        assert!(matches!(c.validate(), Err(SimError::NegativeStart { .. })));
        c.model = Model::AbsBrownian;
        assert!(matches!(c.validate(), Err(SimError::NegativeStart { .. })));
        c.model = Model::BrownianMotion;
        assert!(c.validate().is_ok());
        let huge = base.steps(usize::MAX / 2).paths(4);
        assert!(matches!(huge.validate(), Err(SimError::TooLarge { .. })));
    }

    #[test]
    fn bridge_max_endpoints_and_known_quantile() {
        let m = bridge_max(0.3, -0.2, 0.5, 1.0, 1.0 - 1e-16);
        assert!((m - 0.3).abs() < 1e-7);
        let m = bridge_max(0.0, 0.0, 1.0, 1.0, (-2.0f64).exp());
        assert!((m - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_has_exact_endpoints() {
        let cfg = SimConfig::new(Model::BrownianMotion, 0.0, 1.0, 0.3).steps(7);
        let g = cfg.grid();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[7], 0.3);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn near_constant_gbm_stays_at_one() {
        let cfg = SimConfig::new(Model::GbmMartingale, 1.0, 1e-12, 1.0).steps(128).paths(500);
        let batch = simulate_paths(&cfg).unwrap();
        for v in batch.views() {
            assert!((v.terminal - 1.0).abs() < 1e-6);
            assert!((v.maximum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn batch_invariants_hold_for_every_model() {
        for (model, x0) in [
            (Model::BrownianMotion, -0.7),
            (Model::GbmMartingale, 2.0),
            (Model::AbsBrownian, 0.0),
            (Model::AbsBrownian, 0.4),
        ] {
            for bridge in [true, false] {
                let batch = simulate_paths(&small(model, x0).bridge(bridge)).unwrap();
                let x0 = batch.x0();
                for v in batch.views() {
                    assert!(v.maximum >= v.terminal);
                    assert!(v.maximum >= x0);
                    if bridge {
                        assert!(v.maximum >= v.grid_maximum);
                    } else {
                        assert_eq!(v.maximum, v.grid_maximum);
                    }
                }
            }
        }
    }

    #[test]
    fn bridge_toggle_keeps_grid_values() {
        let on = simulate_paths(&small(Model::GbmMartingale, 1.0)).unwrap();
        let off = simulate_paths(&small(Model::GbmMartingale, 1.0).bridge(false)).unwrap();
        assert_eq!(on.terminal(), off.terminal());
        assert_eq!(on.grid_maximum(), off.grid_maximum());
    }

    #[test]
    fn uncorrected_equals_bridge_off_run() {
        for model in [Model::BrownianMotion, Model::GbmMartingale, Model::AbsBrownian] {
            let cfg = small(model, 0.5);
            let on = simulate_paths(&cfg).unwrap();
            let off = simulate_paths(&cfg.bridge(false)).unwrap();
            assert_eq!(on.uncorrected(), off);
        }
    }

    #[test]
    fn grid_max_matches_trace() {
        let cfg = small(Model::BrownianMotion, 0.0).bridge(false);
        let batch = simulate_paths(&cfg).unwrap();
        for id in [0, 17, 199] {
            let trace = sample_path(&cfg, id).unwrap();
            let m = trace.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(m, batch.maximum()[id]);
            assert_eq!(*trace.values.last().unwrap(), batch.terminal()[id]);
        }
    }

    #[test]
    fn running_max_properties_along_trace() {
        for model in [Model::BrownianMotion, Model::GbmMartingale, Model::AbsBrownian] {
            let x0 = if model == Model::GbmMartingale { 1.0 } else { 0.2 };
            for bridge in [true, false] {
                let cfg = small(model, x0).bridge(bridge);
                for id in 0..20 {
                    let tr = sample_path(&cfg, id).unwrap();
                    assert_eq!(tr.running_max[0], x0);
                    for i in 0..tr.values.len() {
                        assert!(tr.running_max[i] >= tr.values[i]);
                        assert!(tr.running_max[i] >= tr.grid_running_max[i]);
                        if i > 0 {
                            assert!(tr.running_max[i] >= tr.running_max[i - 1]);
                            // the grid max only moves when the path is at it
                            if tr.grid_running_max[i] > tr.grid_running_max[i - 1] {
                                assert_eq!(tr.values[i], tr.grid_running_max[i]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical_and_seeds_differ() {
        let cfg = small(Model::AbsBrownian, 1.0);
        let a = simulate_paths(&cfg).unwrap();
        let b = simulate_paths(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&cfg.clone().seed(7)).unwrap();
        assert_ne!(a.terminal(), c.terminal());
    }

    #[test]
    fn path_streams_do_not_depend_on_batch_size() {
        let small_batch = simulate_paths(&small(Model::BrownianMotion, 0.0).paths(10)).unwrap();
        let big_batch = simulate_paths(&small(Model::BrownianMotion, 0.0).paths(50)).unwrap();
        assert_eq!(small_batch.terminal(), &big_batch.terminal()[..10]);
        assert_eq!(small_batch.maximum(), &big_batch.maximum()[..10]);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let cfg = small(Model::GbmMartingale, 1.0).paths(300);
        let par = simulate_paths(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let par3 = pool.install(|| simulate_paths(&cfg).unwrap());
        let serial: Vec<f64> = (0..cfg.n_paths).map(|i| walk_path(&cfg, i, |_| {}).maximum).collect();
        assert_eq!(par.maximum(), &serial[..]);
        assert_eq!(par3, par);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let batch = simulate_paths(&small(Model::BrownianMotion, 0.0).paths(3)).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,terminal,maximum");
        assert_eq!(lines.len(), 4);
        let cols: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0], 1.0);
        assert_eq!(cols[1], batch.terminal()[1]);
        assert_eq!(cols[2], batch.maximum()[1]);
    }

    #[test]
    fn qv_of_constant_paths_is_zero() {
        // x0 = 0 makes every GBM path identically zero
        let cfg = SimConfig::new(Model::GbmMartingale, 0.0, 0.3, 1.0).steps(32).paths(50);
        let batch = simulate_paths(&cfg).unwrap();
        let qv = qv_integral(&batch, 1.0).unwrap();
        assert_eq!(qv.mean, 0.0);
        assert_eq!(qv.stderr, 0.0);
    }

    #[test]
    fn step_sums_telescope_to_terminal() {
        let batch = simulate_paths(&small(Model::GbmMartingale, 1.0).paths(25)).unwrap();
        let moves = batch.step_sums(|s| s.x_end - s.x_start);
        for (d, x) in moves.iter().zip(batch.terminal()) {
            assert!((d - (x - 1.0)).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bridge_max_dominates_endpoints(
            a in -50.0f64..50.0,
            b in -50.0f64..50.0,
            dt in 1e-6f64..10.0,
            sigma in 1e-6f64..5.0,
            u in 1e-12f64..(1.0 - 1e-12),
        ) {
            let m = bridge_max(a, b, dt, sigma, u);
            prop_assert!(m >= a.max(b));
            prop_assert!(m.is_finite());
        }

        #[test]
        fn bridge_max_is_decreasing_in_u(
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
            u1 in 0.001f64..0.999,
            u2 in 0.001f64..0.999,
        ) {
            let (lo, hi) = if u1 < u2 { (u1, u2) } else { (u2, u1) };
            prop_assert!(bridge_max(a, b, 0.1, 1.0, lo) >= bridge_max(a, b, 0.1, 1.0, hi));
        }
    }
}
