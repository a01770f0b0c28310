//! European option chains and static replication of `E[X_T^2]`.
//!
//! Under zero rates the forward is `X_0` and
//! `E[X_T^2] = F^2 + 2 (int_0^F P(K) dK + int_F^inf C(K) dK)`.
//! The integrals run over out-of-the-money quotes only and stop at the
//! quoted strike range, so truncation biases the result downward.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack allowed below intrinsic value.
pub const INTRINSIC_TOLERANCE: f64 = 1e-9;

pub const HEADER: [&str; 3] = ["strike", "call", "put"];

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("forward must be finite and > 0, got {0}")]
    InvalidForward(f64),
    #[error("expiry must be finite and > 0, got {0}")]
    InvalidExpiry(f64),
    #[error("missing header, expected `strike,call,put`")]
    MissingHeader,
    #[error("line 1: header must be exactly `strike,call,put`, found `{found}`")]
    BadHeader { found: String },
    #[error("line {line}: malformed CSV: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: `{column}` is not a finite decimal: `{value}`")]
    BadNumber {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: strike must be > 0, got {strike}")]
    NonPositiveStrike { line: u64, strike: f64 },
    #[error("line {line}: {column} price must be >= 0, got {price}")]
    NegativePrice {
        line: u64,
        column: &'static str,
        price: f64,
    },
    #[error("line {line}: strike {strike} duplicates line {first_line}")]
    DuplicateStrike { line: u64, strike: f64, first_line: u64 },
    #[error("line {line}: strike {strike} does not increase on the previous strike {previous}")]
    NonMonotoneStrike { line: u64, strike: f64, previous: f64 },
    #[error("line {line}: {column} {price} is below intrinsic value {intrinsic}")]
    IntrinsicViolation {
        line: u64,
        column: &'static str,
        price: f64,
        intrinsic: f64,
    },
    #[error("need at least 3 strikes, got {0}")]
    TooFewStrikes(usize),
    #[error("strikes [{low}, {high}] do not straddle the forward {forward}")]
    NoStraddle { forward: f64, low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
}

/// A validated chain: strikes strictly increasing and straddling the forward,
/// prices at or above intrinsic.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionChain {
    forward: f64,
    expiry: f64,
    quotes: Vec<Quote>,
}

fn check_quote(q: &Quote, forward: f64, line: u64) -> Result<(), ChainError> {
    if !(q.strike > 0.0) {
        return Err(ChainError::NonPositiveStrike { line, strike: q.strike });
    }
    for (column, price, intrinsic) in [
        ("call", q.call, (forward - q.strike).max(0.0)),
        ("put", q.put, (q.strike - forward).max(0.0)),
    ] {
        if price < 0.0 {
            return Err(ChainError::NegativePrice { line, column, price });
        }
        if price < intrinsic - INTRINSIC_TOLERANCE {
            return Err(ChainError::IntrinsicViolation {
                line,
                column,
                price,
                intrinsic,
            });
        }
    }
    Ok(())
}

impl OptionChain {
    /// Validates quotes supplied in strike order. Errors report 1-based
    /// positions in `quotes` as the line.
    pub fn new(forward: f64, expiry: f64, quotes: Vec<Quote>) -> Result<Self, ChainError> {
        let lines: Vec<u64> = (1..=quotes.len() as u64).collect();
        Self::validated(forward, expiry, quotes, &lines)
    }

    fn validated(forward: f64, expiry: f64, quotes: Vec<Quote>, lines: &[u64]) -> Result<Self, ChainError> {
        if !(forward.is_finite() && forward > 0.0) {
            return Err(ChainError::InvalidForward(forward));
        }
        if !(expiry.is_finite() && expiry > 0.0) {
            return Err(ChainError::InvalidExpiry(expiry));
        }
        for (q, &line) in quotes.iter().zip(lines) {
            if !(q.strike.is_finite() && q.call.is_finite() && q.put.is_finite()) {
                return Err(ChainError::BadNumber {
                    line,
                    column: "strike",
                    value: format!("{q:?}"),
                });
            }
            check_quote(q, forward, line)?;
        }
        for i in 1..quotes.len() {
            let (prev, cur) = (quotes[i - 1].strike, quotes[i].strike);
            if cur == prev {
                return Err(ChainError::DuplicateStrike {
                    line: lines[i],
                    strike: cur,
                    first_line: lines[i - 1],
                });
            }
            if cur < prev {
                return Err(ChainError::NonMonotoneStrike {
                    line: lines[i],
                    strike: cur,
                    previous: prev,
                });
            }
        }
        if quotes.len() < 3 {
            return Err(ChainError::TooFewStrikes(quotes.len()));
        }
        let low = quotes[0].strike;
        let high = quotes[quotes.len() - 1].strike;
        if !(low < forward && high > forward) {
            return Err(ChainError::NoStraddle { forward, low, high });
        }
        Ok(Self { forward, expiry, quotes })
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn quotes(&self) -> &[Quote] {
        &self.quotes
    }
}

fn parse_field(raw: &str, line: u64, column: &'static str) -> Result<f64, ChainError> {
    let text = raw.trim();
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ChainError::BadNumber {
            line,
            column,
            value: raw.to_string(),
        }),
    }
}

/// Reads a `strike,call,put` CSV. Rows may come in any order; they are sorted
/// by strike before validation. Errors name the 1-based file line.
pub fn parse_chain<R: Read>(source: R, forward: f64, expiry: f64) -> Result<OptionChain, ChainError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(ChainError::MissingHeader),
        Some(Err(e)) => {
            return Err(ChainError::Malformed {
                line: 1,
                message: e.to_string(),
            })
        }
        Some(Ok(h)) => h,
    };
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(ChainError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows: Vec<(u64, Quote)> = Vec::new();
    for record in records {
        let record = record.map_err(|e| ChainError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let quote = Quote {
            strike: parse_field(&record[0], line, "strike")?,
            call: parse_field(&record[1], line, "call")?,
            put: parse_field(&record[2], line, "put")?,
        };
        rows.push((line, quote));
    }
    // stable, so a duplicate is reported at its later line
    rows.sort_by(|a, b| a.1.strike.total_cmp(&b.1.strike));
    let (lines, quotes): (Vec<u64>, Vec<Quote>) = rows.into_iter().unzip();
    OptionChain::validated(forward, expiry, quotes, &lines)
}

/// Result of replicating `E[X_T^2]` from a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub forward: f64,
    pub second_moment: f64,
    /// Trapezoid integral of puts over `[lowest strike, F]`.
    pub put_integral: f64,
    /// Trapezoid integral of calls over `[F, highest strike]`.
    pub call_integral: f64,
    /// Out-of-the-money quote used at `K = F`.
    pub atm_quote: f64,
    /// Integration range; nothing is extrapolated beyond it.
    pub lower_strike: f64,
    pub upper_strike: f64,
}

impl Replication {
    pub fn l2(&self) -> f64 {
        self.second_moment.sqrt()
    }
}

fn trapezoid(nodes: &[(f64, f64)]) -> f64 {
    nodes
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

pub fn replicate(chain: &OptionChain) -> Replication {
    let f = chain.forward;
    let quotes = &chain.quotes;
    let mut put_nodes: Vec<(f64, f64)> = quotes.iter().filter(|q| q.strike < f).map(|q| (q.strike, q.put)).collect();
    let mut call_nodes: Vec<(f64, f64)> = quotes.iter().filter(|q| q.strike > f).map(|q| (q.strike, q.call)).collect();

    let (put_atm, call_atm) = match quotes.iter().find(|q| q.strike == f) {
        Some(q) => (q.put, q.call),
        None => {
            // validated chains always have quotes on both sides of F
            let (kb, pb) = *put_nodes.last().expect("strike below forward");
            let (ka, ca) = call_nodes[0];
            let v = pb + (ca - pb) * (f - kb) / (ka - kb);
            (v, v)
        }
    };
    put_nodes.push((f, put_atm));
    call_nodes.insert(0, (f, call_atm));

    let put_integral = trapezoid(&put_nodes);
    let call_integral = trapezoid(&call_nodes);
    Replication {
        forward: f,
        second_moment: f * f + 2.0 * (put_integral + call_integral),
        put_integral,
        call_integral,
        atm_quote: 0.5 * (put_atm + call_atm),
        lower_strike: quotes[0].strike,
        upper_strike: quotes[quotes.len() - 1].strike,
    }
}

/// Replicated `E[X_T^2]`.
pub fn replicate_second_moment(chain: &OptionChain) -> f64 {
    replicate(chain).second_moment
}
