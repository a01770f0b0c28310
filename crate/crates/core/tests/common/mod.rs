//! Independent oracles and shared batches for the integration tests.
//!
//! Nothing here calls into the simulation or estimation paths it is used to
//! check: densities, quadrature and option formulas are written out from
//! the closed forms.

#![allow(dead_code)]

use std::sync::OnceLock;

use maxineq::marketdata::{OptionChain, Quote};
use maxineq::sim::{simulate_paths, Model, PathBatch, SimConfig};
use statrs::distribution::{ContinuousCDF, Normal};

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// `E[M_1^k]` for standard Brownian motion: `M_1 ~ |N(0,1)|`.
pub fn half_normal_moment(k: i32) -> f64 {
    simpson(|m| m.powi(k) * 2.0 * std_normal_pdf(m), 0.0, 12.0, 20_000)
}

/// `E[B_1 M_1]` by integrating `x m f(m, x)` over `m >= max(x, 0)` with the
/// reflection-principle joint density `f(m, x) = 2(2m - x) phi(2m - x)`.
pub fn joint_density_e_xm() -> f64 {
    let density = |m: f64, x: f64| 2.0 * (2.0 * m - x) * std_normal_pdf(2.0 * m - x);
    simpson(
        |m| simpson(|x| x * m * density(m, x), -10.0, m, 2_000),
        0.0,
        10.0,
        2_000,
    )
}

/// Analytic bridge-maximum CDF for a bridge from 0 to `b`.
pub fn bridge_max_cdf(y: f64, b: f64, dt: f64, sigma: f64) -> f64 {
    if y <= b.max(0.0) {
        0.0
    } else {
        1.0 - (-2.0 * y * (y - b) / (sigma * sigma * dt)).exp()
    }
}

/// `P(max_{[0,T]} X >= a)` for `X = x0 exp(sigma W - sigma^2 t / 2)`,
/// via the reflection principle for Brownian motion with drift.
pub fn gbm_max_tail(x0: f64, sigma: f64, t: f64, a: f64) -> f64 {
    if a <= x0 {
        return 1.0;
    }
    let b = (a / x0).ln();
    let mu = -0.5 * sigma * sigma;
    let s = sigma * t.sqrt();
    1.0 - std_normal_cdf((b - mu * t) / s) + (2.0 * mu * b / (sigma * sigma)).exp() * std_normal_cdf((-b - mu * t) / s)
}

/// `E[M_T]` for the geometric martingale: `x0 (1 + int_0^inf e^b P(max Y >= b) db)`.
pub fn gbm_expected_max(x0: f64, sigma: f64, t: f64) -> f64 {
    let tail = |b: f64| b.exp() * gbm_max_tail(1.0, sigma, t, b.exp());
    x0 * (1.0 + simpson(tail, 0.0, 12.0 * sigma * t.sqrt() + 1.0, 40_000))
}

/// Undiscounted lognormal call and put on a forward `f`.
pub fn black(f: f64, k: f64, sigma: f64, t: f64) -> (f64, f64) {
    let s = sigma * t.sqrt();
    let d1 = ((f / k).ln() + 0.5 * s * s) / s;
    let d2 = d1 - s;
    let call = f * std_normal_cdf(d1) - k * std_normal_cdf(d2);
    let put = k * std_normal_cdf(-d2) - f * std_normal_cdf(-d1);
    (call.max((f - k).max(0.0)), put.max((k - f).max(0.0)))
}

/// Strikes `lo, lo + step, ..., hi` computed from integer multiples.
pub fn strike_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| ((lo / step).round() + i as f64) * step).collect()
}

pub fn lognormal_chain(f: f64, sigma: f64, t: f64, strikes: &[f64]) -> OptionChain {
    let quotes = strikes
        .iter()
        .map(|&k| {
            let (call, put) = black(f, k, sigma, t);
            Quote { strike: k, call, put }
        })
        .collect();
    OptionChain::new(f, t, quotes).unwrap()
}

pub fn chain_csv(chain: &OptionChain) -> String {
    let mut s = String::from("strike,call,put\n");
    for q in chain.quotes() {
        s.push_str(&format!("{:?},{:?},{:?}\n", q.strike, q.call, q.put));
    }
    s
}

/// `|a - b| <= k * se`
pub fn within(a: f64, b: f64, k: f64, se: f64) -> bool {
    (a - b).abs() <= k * se
}

fn cached(cell: &'static OnceLock<PathBatch>, cfg: SimConfig) -> &'static PathBatch {
    cell.get_or_init(|| simulate_paths(&cfg).unwrap())
}

/// Desk-scale batches, simulated once per test binary.
pub fn bm0() -> &'static PathBatch {
    static B: OnceLock<PathBatch> = OnceLock::new();
    cached(&B, SimConfig::new(Model::BrownianMotion, 0.0, 1.0, 1.0))
}

pub fn bm5() -> &'static PathBatch {
    static B: OnceLock<PathBatch> = OnceLock::new();
    cached(&B, SimConfig::new(Model::BrownianMotion, 5.0, 1.0, 1.0))
}

pub fn gbm(sigma_index: usize) -> &'static PathBatch {
    static LOW: OnceLock<PathBatch> = OnceLock::new();
    static HIGH: OnceLock<PathBatch> = OnceLock::new();
    match sigma_index {
        0 => cached(&LOW, SimConfig::new(Model::GbmMartingale, 1.0, 0.2, 1.0)),
        _ => cached(&HIGH, SimConfig::new(Model::GbmMartingale, 1.0, 0.5, 1.0)),
    }
}

pub fn gbm_fine(sigma_index: usize) -> &'static PathBatch {
    static LOW: OnceLock<PathBatch> = OnceLock::new();
    static HIGH: OnceLock<PathBatch> = OnceLock::new();
    match sigma_index {
        0 => cached(&LOW, SimConfig::new(Model::GbmMartingale, 1.0, 0.2, 1.0).steps(4096)),
        _ => cached(&HIGH, SimConfig::new(Model::GbmMartingale, 1.0, 0.5, 1.0).steps(4096)),
    }
}

pub fn absbm(x0_index: usize) -> &'static PathBatch {
    static ZERO: OnceLock<PathBatch> = OnceLock::new();
    static ONE: OnceLock<PathBatch> = OnceLock::new();
    match x0_index {
        0 => cached(&ZERO, SimConfig::new(Model::AbsBrownian, 0.0, 1.0, 1.0)),
        _ => cached(&ONE, SimConfig::new(Model::AbsBrownian, 1.0, 1.0, 1.0)),
    }
}

pub fn flat_gbm() -> &'static PathBatch {
    static B: OnceLock<PathBatch> = OnceLock::new();
    cached(&B, SimConfig::new(Model::GbmMartingale, 1.0, 1e-12, 1.0).steps(256).paths(10_000))
}
