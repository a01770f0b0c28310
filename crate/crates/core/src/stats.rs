//! Monte Carlo moment estimates with CLT standard errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{PathBatch, PathView};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no samples to estimate `{0}`")]
    Empty(String),
    #[error("`{label}` is not finite ({value}) at path {index}")]
    NonFinite {
        label: String,
        index: usize,
        value: f64,
    },
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Sample mean with its standard error `s / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub label: String,
}

impl MomentEstimate {
    pub fn from_samples(label: impl Into<String>, samples: &[f64]) -> Result<Self, StatsError> {
        let label = label.into();
        if samples.is_empty() {
            return Err(StatsError::Empty(label));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(StatsError::NonFinite { label, index, value });
        }
        let n = samples.len();
        let first = samples[0];
        if samples.iter().all(|&v| v == first) {
            return Ok(Self {
                mean: first,
                stderr: 0.0,
                n: n as u64,
                label,
            });
        }
        let mean = samples.iter().copied().collect::<Neumaier>().total() / n as f64;
        // corrected two-pass: the second sum removes the residual bias of `mean`
        let dev: Neumaier = samples.iter().map(|&v| v - mean).collect();
        let sq: Neumaier = samples.iter().map(|&v| (v - mean) * (v - mean)).collect();
        let m2 = (sq.total() - dev.total() * dev.total() / n as f64).max(0.0);
        let stderr = if n > 1 {
            (m2 / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            stderr,
            n: n as u64,
            label,
        })
    }

    /// Sum of squared deviations implied by `stderr` and `n`.
    fn m2(&self) -> f64 {
        let n = self.n as f64;
        self.stderr * self.stderr * n * (n - 1.0)
    }

    /// Estimate over the union of two disjoint sample sets.
    pub fn combine(&self, other: &Self) -> Self {
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (nb / n);
        let m2 = self.m2() + other.m2() + delta * delta * (na * nb / n);
        let stderr = if n > 1.0 {
            (m2 / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n: self.n + other.n,
            label: self.label.clone(),
        }
    }

    /// Same estimate shifted by a known constant.
    pub fn shifted(mut self, c: f64, label: impl Into<String>) -> Self {
        self.mean += c;
        self.label = label.into();
        self
    }
}

fn evaluate<F>(batch: &PathBatch, label: &str, f: F) -> Result<Vec<f64>, StatsError>
where
    F: Fn(PathView) -> f64,
{
    let values: Vec<f64> = batch.views().map(f).collect();
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(StatsError::NonFinite {
            label: label.to_string(),
            index,
            value,
        });
    }
    Ok(values)
}

/// Plain Monte Carlo estimate of `E[f(path)]`.
pub fn estimate<F>(batch: &PathBatch, label: &str, f: F) -> Result<MomentEstimate, StatsError>
where
    F: Fn(PathView) -> f64,
{
    if batch.is_empty() {
        return Err(StatsError::Empty(label.to_string()));
    }
    MomentEstimate::from_samples(label, &evaluate(batch, label, f)?)
}

/// Estimate of `E[f(path) - g(path)] - c` from per-path differences, so the
/// standard error accounts for the covariance of `f` and `g`.
pub fn paired_residual<F, G>(
    batch: &PathBatch,
    label: &str,
    f: F,
    g: G,
    c: f64,
) -> Result<MomentEstimate, StatsError>
where
    F: Fn(PathView) -> f64,
    G: Fn(PathView) -> f64,
{
    let diff = estimate(batch, label, |v| f(v) - g(v))?;
    let mean = diff.mean - c;
    Ok(MomentEstimate { mean, ..diff })
}
