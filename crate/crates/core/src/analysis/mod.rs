//! Experiment drivers: scaling fits, scans over `(n, k)` grids, the lattice
//! sharpness computation, the integer-distance aggregation and the energy scan.
//!
//! Every scan returns a report whose rows are sorted, so identical inputs give
//! byte-identical CSV.

mod output;
mod scans;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use output::{csv_real, loglog_svg};
pub use scans::*;

/// Least-squares fit of `log y = exponent log x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: Vec<(f64, f64)>,
    /// Largest observed/bound ratio among the samples, when a bound applies.
    pub empirical_c: f64,
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 2 {
        return Err(Error::input(format!("a scaling fit needs at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::input("scaling fit samples must be positive and finite"));
    }
    let m = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::input("scaling fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(ScalingFit { exponent, intercept, r_squared, samples: samples.to_vec(), empirical_c: 0.0 })
}

/// A named acceptance window `[lo, hi]` and the value checked against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl WindowCheck {
    pub fn new(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        WindowCheck { name: name.to_string(), value, lo, hi, pass: lo <= value && value <= hi }
    }
}

/// `max / min` of positive values; infinite when some value is zero.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
