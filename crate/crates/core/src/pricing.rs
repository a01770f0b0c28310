//! Upper bounds on the undiscounted lookback claim `E[M_T]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Model, PathBatch};
use crate::stats::{self, MomentEstimate, StatsError};
use crate::theory::{CheckReport, Rhs, TheoryError, BOUND_GAP};

/// Relative slack under which `l2 < x0` is treated as rounding and clamped.
const L2_ROUNDING: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PricingError {
    #[error("x0 must be finite and >= 0, got {0}")]
    InvalidStart(f64),
    #[error("l2 = {l2} is below x0 = {x0}; not a martingale moment pair")]
    InconsistentMoments { x0: f64, l2: f64 },
    #[error("lookback pricing needs a nonnegative martingale, got {0}")]
    UnsupportedModel(Model),
    #[error("lookback pricing needs the bridge-corrected maximum")]
    BridgeRequired,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Three bounds on `E[M_T]` given `X_0` and `l2 = E[X_T^2]^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub x0: f64,
    pub l2: f64,
    /// `2 l2`, from the classic `L^2` maximal inequality.
    pub classic: f64,
    /// `sqrt(2) l2`.
    pub sqrt2: f64,
    /// `x0 + sqrt(l2^2 - x0^2)`.
    pub tight: f64,
}

pub fn lookback_bounds(x0: f64, l2: f64) -> Result<BoundSet, PricingError> {
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(PricingError::InvalidStart(x0));
    }
    if !l2.is_finite() || l2 < x0 * (1.0 - L2_ROUNDING) {
        return Err(PricingError::InconsistentMoments { x0, l2 });
    }
    let l2 = l2.max(x0);
    let spread = ((l2 - x0) * (l2 + x0)).max(0.0).sqrt();
    Ok(BoundSet {
        x0,
        l2,
        classic: 2.0 * l2,
        sqrt2: std::f64::consts::SQRT_2 * l2,
        tight: x0 + spread,
    })
}

/// `E[X_T^2]^{1/2}` for the geometric martingale: `x0 exp(sigma^2 T / 2)`.
pub fn gbm_l2(x0: f64, sigma: f64, horizon: f64) -> f64 {
    x0 * (0.5 * sigma * sigma * horizon).exp()
}

/// Monte Carlo estimate of `E[M_T]`.
pub fn mc_lookback(batch: &PathBatch) -> Result<MomentEstimate, PricingError> {
    let model = batch.model();
    if !(model.is_martingale() && model.is_nonnegative()) {
        return Err(PricingError::UnsupportedModel(model));
    }
    if !batch.config().bridge_correction {
        return Err(PricingError::BridgeRequired);
    }
    Ok(stats::estimate(batch, "E[M_T]", |v| v.maximum)?)
}

/// Empirical `E[X_T^2]^{1/2}` of a batch.
pub fn empirical_l2(batch: &PathBatch) -> Result<f64, StatsError> {
    Ok(stats::estimate(batch, "E[X_T^2]", |v| v.terminal * v.terminal)?.mean.sqrt())
}

/// Checks `E[M_T] - E[X_T] <= sqrt(E[X_T^2] - X_0^2)` on one batch.
///
/// The left side is a paired mean. The right side is a nonlinear function of
/// a mean, so the residual stderr comes from the delta method applied to the
/// per-path values `(M - X) - (X^2 - X_0^2) / (2 s)`.
pub fn bound_gap_report(batch: &PathBatch) -> Result<CheckReport, TheoryError> {
    let model = batch.model();
    if !model.is_martingale() {
        return Err(TheoryError::NotMartingale { check: BOUND_GAP, model });
    }
    let x0 = batch.x0();
    let lhs = stats::estimate(batch, "E[M_T] - E[X_T]", |v| v.maximum - v.terminal)?;
    let second = stats::estimate(batch, "E[X_T^2] - X_0^2", |v| v.terminal * v.terminal - x0 * x0)?;
    let variance = second.mean.max(0.0);
    let s = variance.sqrt();
    let (rhs, residual) = if s > 0.0 {
        let rhs = MomentEstimate {
            mean: s,
            stderr: second.stderr / (2.0 * s),
            n: second.n,
            label: "sqrt(E[X_T^2] - X_0^2)".into(),
        };
        let linear = stats::estimate(batch, BOUND_GAP, |v| {
            (v.maximum - v.terminal) - (v.terminal * v.terminal - x0 * x0) / (2.0 * s)
        })?;
        let residual = MomentEstimate {
            mean: lhs.mean - s,
            ..linear
        };
        (rhs, residual)
    } else {
        let rhs = MomentEstimate {
            mean: 0.0,
            stderr: 0.0,
            n: second.n,
            label: "sqrt(E[X_T^2] - X_0^2)".into(),
        };
        (rhs, lhs.clone())
    };
    Ok(CheckReport::build(BOUND_GAP, 1.0, lhs, Rhs::Estimate(rhs), &residual))
}
