use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Photodiode responsivity, discrete channel taps and a DC offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub responsivity: f64,
    pub impulse_response: Vec<f64>,
    pub dc_offset: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            responsivity: 1.0,
            impulse_response: vec![1.0],
            dc_offset: 0.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity.is_finite() && self.responsivity > 0.0) {
            return Err(Error::invalid("responsivity must be positive"));
        }
        if self.impulse_response.is_empty() {
            return Err(Error::invalid("impulse response needs at least one tap"));
        }
        if self.impulse_response.iter().any(|h| !h.is_finite()) || !self.dc_offset.is_finite() {
            return Err(Error::invalid("channel parameters must be finite"));
        }
        Ok(())
    }
}

/// Received signal `y[i] = R * sum_j h[j] x[i-j] + dc + noise[i]`.
///
/// The convolution is causal with zero history and trimmed to `x.len()`.
/// Only the first `x.len()` noise samples are used.
pub fn apply_channel(x: &TimeSeries, ch: &ChannelParams, noise: &TimeSeries) -> Result<TimeSeries> {
    ch.validate()?;
    if x.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            left: x.sample_rate_hz(),
            right: noise.sample_rate_hz(),
        });
    }
    if noise.len() < x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: noise.len(),
        });
    }
    let xs = x.samples();
    let h = &ch.impulse_response;
    let y = xs
        .iter()
        .enumerate()
        .zip(noise.samples())
        .map(|((i, _), &v)| {
            let conv: f64 = h
                .iter()
                .take(i + 1)
                .enumerate()
                .map(|(j, &hj)| hj * xs[i - j])
                .sum();
            ch.responsivity * conv + ch.dc_offset + v
        })
        .collect();
    x.with_samples(y)
}
