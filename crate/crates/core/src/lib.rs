//! Monte Carlo verification of sharpened Doob maximal identities and
//! inequalities, and the lookback price bounds that follow from them.
//!
//! - [`sim`]: martingale path generation with exact bridge-sampled maxima
//! - [`stats`]: moment estimates and paired residuals
//! - [`theory`]: the identities and inequalities as [`theory::CheckReport`]s
//! - [`pricing`]: bounds on `E[M_T]` and the Monte Carlo lookback price
//! - [`marketdata`]: option chains and static replication of `E[X_T^2]`
//! - [`cli`]: the `maxineq` command line

pub mod cli;
pub mod marketdata;
pub mod pricing;
pub mod sim;
pub mod stats;
pub mod theory;

pub use marketdata::{parse_chain, replicate_second_moment, OptionChain, Quote};
pub use pricing::{lookback_bounds, mc_lookback, BoundSet};
pub use sim::{bridge_max, simulate_paths, Model, PathBatch, SimConfig};
pub use stats::MomentEstimate;
pub use theory::{CheckReport, Verdict};

/// `x^e` with exact integer fast paths, so `e = 1, 2` stay valid for
/// negative `x`.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

#[cfg(test)]
mod tests {
    use super::pow;

    #[test]
    fn pow_fast_paths_agree_with_powf() {
        for x in [0.0, 0.3, 1.0, 2.5, 17.0] {
            for e in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
                let a = pow(x, e);
                let b = f64::powf(x, e);
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "{x}^{e}");
            }
        }
        assert_eq!(pow(-2.0, 1.0), -2.0);
        assert_eq!(pow(-2.0, 2.0), 4.0);
        assert_eq!(pow(-2.0, 3.0), -8.0);
    }
}
