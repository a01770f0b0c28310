//! Maximal identities and inequalities as Monte Carlo checks.
//!
//! Every check estimates both sides on the same paths and reports the paired
//! residual `lhs - rhs`. Identities claim `residual = 0`, inequalities claim
//! `residual <= 0`. Exponents on `M_T` are passed as used: `identity_residual`
//! and `submartingale_gap` take `p` with `M_T^{p+1}` on the right, and
//! `lp_bound_check` takes the norm exponent `q > 1` directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pow;
use crate::sim::{Model, PathBatch};
use crate::stats::{self, MomentEstimate, StatsError};

/// Default verdict threshold in standard errors.
pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;

/// Relative size of floating-point noise folded into every residual stderr.
/// Keeps degenerate (near-constant) batches from producing spurious z-scores.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("exponent must be finite and > {min}, got {value}")]
    InvalidExponent { value: f64, min: f64 },
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("threshold a must be finite and > 0, got {0}")]
    InvalidThreshold(f64),
    #[error("{check} needs a martingale, {model} is a submartingale")]
    NotMartingale { check: &'static str, model: Model },
    #[error("{check} needs a nonnegative model, {model} is signed")]
    SignedModel { check: &'static str, model: Model },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Right-hand side of a check: estimated, or known exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rhs {
    Estimate(MomentEstimate),
    Exact(f64),
}

impl Rhs {
    pub fn value(&self) -> f64 {
        match self {
            Rhs::Estimate(e) => e.mean,
            Rhs::Exact(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Identity,
    Inequality,
}

pub const IDENTITY: &str = "identity";
pub const SQUARED_GAP: &str = "squared_gap";
pub const SUBMARTINGALE_GAP: &str = "submartingale_gap";
pub const DOOB_TAIL: &str = "doob_tail";
pub const LP_CLASSIC: &str = "lp_bound_classic";
pub const LP_SHARPENED: &str = "lp_bound_sharpened";
pub const BOUND_GAP: &str = "bound_gap";

/// Outcome of one identity or inequality check.
///
/// `p` is the exponent argument of the check (`q` for the Lp checks, `1` for
/// the tail and bound checks). The tail threshold is carried in `check_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub p: f64,
    pub lhs: MomentEstimate,
    pub rhs: Rhs,
    pub residual: f64,
    pub residual_stderr: f64,
    pub z: f64,
    pub verdict: Verdict,
}

impl CheckReport {
    pub(crate) fn build(
        check_id: impl Into<String>,
        p: f64,
        lhs: MomentEstimate,
        rhs: Rhs,
        residual: &MomentEstimate,
    ) -> Self {
        let scale = 1f64.max(lhs.mean.abs()).max(rhs.value().abs());
        let floor = ROUNDOFF_FLOOR * scale;
        let residual_stderr = residual.stderr.max(floor);
        let mut report = Self {
            check_id: check_id.into(),
            p,
            lhs,
            rhs,
            residual: residual.mean,
            residual_stderr,
            z: residual.mean / residual_stderr,
            verdict: Verdict::Inconclusive,
        };
        report.verdict = report.classify(DEFAULT_Z_THRESHOLD);
        report
    }

    pub fn kind(&self) -> CheckKind {
        let id = self.check_id.as_str();
        if id.starts_with(IDENTITY) || id.starts_with(SQUARED_GAP) {
            CheckKind::Identity
        } else {
            CheckKind::Inequality
        }
    }

    fn classify(&self, threshold: f64) -> Verdict {
        let floor = ROUNDOFF_FLOOR * 1f64.max(self.lhs.mean.abs()).max(self.rhs.value().abs());
        if self.lhs.n < 2 && self.residual.abs() > floor {
            return Verdict::Inconclusive;
        }
        let ok = match self.kind() {
            CheckKind::Identity => self.z.abs() <= threshold,
            CheckKind::Inequality => self.z <= threshold,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Re-derives the verdict for a different z threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.verdict = self.classify(threshold);
        self
    }

    /// `rhs - lhs`; positive when an inequality holds with room to spare.
    pub fn slack(&self) -> f64 {
        -self.residual
    }
}

fn check_p(p: f64, min: f64) -> Result<(), TheoryError> {
    if p.is_finite() && p > min {
        Ok(())
    } else {
        Err(TheoryError::InvalidExponent { value: p, min })
    }
}

fn require_martingale(batch: &PathBatch, check: &'static str) -> Result<(), TheoryError> {
    let model = batch.model();
    if model.is_martingale() {
        Ok(())
    } else {
        Err(TheoryError::NotMartingale { check, model })
    }
}

fn require_nonnegative(batch: &PathBatch, check: &'static str) -> Result<(), TheoryError> {
    let model = batch.model();
    if model.is_nonnegative() {
        Ok(())
    } else {
        Err(TheoryError::SignedModel { check, model })
    }
}

/// `E[X_T M_T^p] = p/(p+1) E[M_T^{p+1}] + X_0^{p+1}/(p+1)` for continuous
/// martingales. Signed models are allowed only for `p = 1`.
pub fn identity_residual(batch: &PathBatch, p: f64) -> Result<CheckReport, TheoryError> {
    check_p(p, 0.0)?;
    require_martingale(batch, IDENTITY)?;
    if p != 1.0 {
        require_nonnegative(batch, IDENTITY)?;
    }
    let w = p / (p + 1.0);
    let c = pow(batch.x0(), p + 1.0) / (p + 1.0);
    let lhs = stats::estimate(batch, "E[X_T M_T^p]", |v| v.terminal * pow(v.maximum, p))?;
    let rhs = stats::estimate(batch, "p/(p+1) E[M_T^(p+1)]", |v| w * pow(v.maximum, p + 1.0))?
        .shifted(c, "p/(p+1) E[M_T^(p+1)] + X_0^(p+1)/(p+1)");
    let residual = stats::paired_residual(
        batch,
        IDENTITY,
        |v| v.terminal * pow(v.maximum, p),
        |v| w * pow(v.maximum, p + 1.0),
        c,
    )?;
    Ok(CheckReport::build(IDENTITY, p, lhs, Rhs::Estimate(rhs), &residual))
}

/// `E[X_T M_T^p] >= p/(p+1) E[M_T^{p+1}] + X_0^{p+1}/(p+1)` for nonnegative
/// submartingales, reported as `rhs_of_claim - E[X_T M_T^p] <= 0`.
pub fn submartingale_gap(batch: &PathBatch, p: f64) -> Result<CheckReport, TheoryError> {
    check_p(p, 0.0)?;
    require_nonnegative(batch, SUBMARTINGALE_GAP)?;
    let w = p / (p + 1.0);
    let c = pow(batch.x0(), p + 1.0) / (p + 1.0);
    let lhs = stats::estimate(batch, "p/(p+1) E[M_T^(p+1)]", |v| w * pow(v.maximum, p + 1.0))?
        .shifted(c, "p/(p+1) E[M_T^(p+1)] + X_0^(p+1)/(p+1)");
    let rhs = stats::estimate(batch, "E[X_T M_T^p]", |v| v.terminal * pow(v.maximum, p))?;
    let residual = stats::paired_residual(
        batch,
        SUBMARTINGALE_GAP,
        |v| w * pow(v.maximum, p + 1.0),
        |v| v.terminal * pow(v.maximum, p),
        -c,
    )?;
    Ok(CheckReport::build(SUBMARTINGALE_GAP, p, lhs, Rhs::Estimate(rhs), &residual))
}

/// `a P(M_T >= a) <= E[X_T 1{M_T >= a}]`.
pub fn doob_tail_check(batch: &PathBatch, a: f64) -> Result<CheckReport, TheoryError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(TheoryError::InvalidThreshold(a));
    }
    require_nonnegative(batch, DOOB_TAIL)?;
    let hit = |m: f64| if m >= a { 1.0 } else { 0.0 };
    let lhs = stats::estimate(batch, "a P(M_T >= a)", |v| a * hit(v.maximum))?;
    let rhs = stats::estimate(batch, "E[X_T 1{M_T >= a}]", |v| v.terminal * hit(v.maximum))?;
    let residual = stats::paired_residual(
        batch,
        DOOB_TAIL,
        |v| a * hit(v.maximum),
        |v| v.terminal * hit(v.maximum),
        0.0,
    )?;
    Ok(CheckReport::build(format!("{DOOB_TAIL}(a={a})"), 1.0, lhs, Rhs::Estimate(rhs), &residual))
}

/// Doob's `L^q` bound `E[M_T^q] <= (q/(q-1))^q E[X_T^q]`; the sharpened form
/// adds `(q/(q-1)) X_0^q` to the left side.
pub fn lp_bound_check(batch: &PathBatch, q: f64, sharpened: bool) -> Result<CheckReport, TheoryError> {
    check_p(q, 1.0)?;
    let id = if sharpened { LP_SHARPENED } else { LP_CLASSIC };
    require_nonnegative(batch, id)?;
    let k = q / (q - 1.0);
    let factor = pow(k, q);
    let offset = if sharpened { k * pow(batch.x0(), q) } else { 0.0 };
    let lhs = stats::estimate(batch, "E[M_T^q]", |v| pow(v.maximum, q))?;
    let lhs = if sharpened {
        lhs.shifted(offset, "E[M_T^q] + q/(q-1) X_0^q")
    } else {
        lhs
    };
    let rhs = stats::estimate(batch, "(q/(q-1))^q E[X_T^q]", |v| factor * pow(v.terminal, q))?;
    let residual = stats::paired_residual(
        batch,
        id,
        |v| pow(v.maximum, q),
        |v| factor * pow(v.terminal, q),
        -offset,
    )?;
    Ok(CheckReport::build(id, q, lhs, Rhs::Estimate(rhs), &residual))
}

/// `E[(M_T - X_T)^2] = E[X_T^2] - X_0^2` for continuous martingales.
pub fn squared_gap_check(batch: &PathBatch) -> Result<CheckReport, TheoryError> {
    require_martingale(batch, SQUARED_GAP)?;
    let x0 = batch.x0();
    let lhs = stats::estimate(batch, "E[(M_T - X_T)^2]", |v| (v.maximum - v.terminal).powi(2))?;
    let rhs = stats::estimate(batch, "E[X_T^2]", |v| v.terminal * v.terminal)?
        .shifted(-x0 * x0, "E[X_T^2] - X_0^2");
    let residual = stats::paired_residual(
        batch,
        SQUARED_GAP,
        |v| (v.maximum - v.terminal).powi(2),
        |v| v.terminal * v.terminal,
        -x0 * x0,
    )?;
    Ok(CheckReport::build(SQUARED_GAP, 1.0, lhs, Rhs::Estimate(rhs), &residual))
}

/// `1 / (eps^p (1 - eps) (p + 1))`, the coefficient minimized over `eps`.
pub fn epsilon_bound(p: f64, eps: f64) -> Result<f64, TheoryError> {
    check_p(p, 0.0)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TheoryError::InvalidEpsilon(eps));
    }
    Ok(1.0 / (eps.powf(p) * (1.0 - eps) * (p + 1.0)))
}

/// Minimizer `p/(p+1)` of [`epsilon_bound`] and the minimum `((p+1)/p)^p`.
pub fn optimal_epsilon(p: f64) -> Result<(f64, f64), TheoryError> {
    check_p(p, 0.0)?;
    Ok((p / (p + 1.0), ((p + 1.0) / p).powf(p)))
}
