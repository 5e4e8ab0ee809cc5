//! Whiteness testing: sample autocorrelation and the Ljung-Box portmanteau
//! statistic with chi-square rejection thresholds.

pub mod special;

use serde::{Deserialize, Serialize};

pub use special::{chi2_cdf, chi2_quantile, chi2_sf};

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Sample autocorrelation `p(k) = sum_{j>k} x_j x_{j-k} / sum_j x_j^2` for
/// `k = 1..=max_lag`, on the series as given (no mean removal).
pub fn autocorrelation(ts: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    autocorrelation_of(ts.samples(), max_lag)
}

pub fn autocorrelation_of(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || max_lag >= x.len() {
        return Err(Error::invalid(format!(
            "max_lag must be in 1..{}, got {max_lag}",
            x.len()
        )));
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok((1..=max_lag)
        .map(|k| {
            let lagged: f64 = x[k..].iter().zip(x).map(|(a, b)| a * b).sum();
            lagged / energy
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxOptions {
    pub max_lag: usize,
    /// Significance level.
    pub alpha: f64,
    /// Subtract the sample mean before computing autocorrelations.
    pub demean: bool,
}

impl Default for LjungBoxOptions {
    fn default() -> Self {
        LjungBoxOptions {
            max_lag: 100,
            alpha: 0.05,
            demean: true,
        }
    }
}

/// Per-lag Ljung-Box statistics. Index `i` holds lag `m = i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    pub q_stats: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub alpha: f64,
    pub reject: Vec<bool>,
    pub n_samples: usize,
    pub demeaned: bool,
}

impl LjungBoxResult {
    pub fn lags(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.q_stats.len()
    }

    pub fn rejected_everywhere(&self) -> bool {
        self.reject.iter().all(|&r| r)
    }

    pub fn reject_fraction(&self) -> f64 {
        self.reject.iter().filter(|&&r| r).count() as f64 / self.reject.len() as f64
    }
}

/// Upper `1 - alpha` chi-square quantiles for `m = 1..=max_lag`.
pub fn ljung_box_thresholds(max_lag: usize, alpha: f64) -> Result<Vec<f64>> {
    (1..=max_lag)
        .map(|m| chi2_quantile(1.0 - alpha, m as u32))
        .collect()
}

pub fn ljung_box(ts: &TimeSeries, opts: &LjungBoxOptions) -> Result<LjungBoxResult> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1), got {}", opts.alpha)));
    }
    let thresholds = ljung_box_thresholds(opts.max_lag, opts.alpha)?;
    ljung_box_with_thresholds(ts.samples(), opts, thresholds)
}

/// Same as [`ljung_box`] with precomputed thresholds, for repeated trials.
pub fn ljung_box_with_thresholds(
    samples: &[f64],
    opts: &LjungBoxOptions,
    thresholds: Vec<f64>,
) -> Result<LjungBoxResult> {
    if thresholds.len() != opts.max_lag {
        return Err(Error::LengthMismatch {
            expected: opts.max_lag,
            actual: thresholds.len(),
        });
    }
    let rho = if opts.demean {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
        autocorrelation_of(&centered, opts.max_lag)?
    } else {
        autocorrelation_of(samples, opts.max_lag)?
    };

    let n = samples.len() as f64;
    let mut acc = 0.0;
    let q_stats: Vec<f64> = rho
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = (i + 1) as f64;
            acc += r * r / (n - k);
            n * (n + 2.0) * acc
        })
        .collect();
    let reject = q_stats.iter().zip(&thresholds).map(|(q, t)| q > t).collect();
    Ok(LjungBoxResult {
        q_stats,
        thresholds,
        alpha: opts.alpha,
        reject,
        n_samples: samples.len(),
        demeaned: opts.demean,
    })
}
