//! Time-series container and the signal-level building blocks: capture
//! files, amplitude normalization, OOK pulse trains and the received-signal
//! channel model `y = R (x * h) + dc + v`.

pub(crate) mod capture;
mod channel;
mod ook;

pub use capture::{load_capture, save_capture, CaptureFormat};
pub use channel::{apply_channel, ChannelParams};
pub use ook::{generate_ook, OokPattern};

use crate::error::{Error, Result};

/// A uniformly sampled real-valued capture.
///
/// Sample `i` sits at time `i / sample_rate_hz`. Construction rejects empty
/// series, non-positive rates and non-finite samples, so every `TimeSeries`
/// in circulation is valid input for the analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: Option<String>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(TimeSeries {
            samples,
            sample_rate_hz,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i` in seconds.
    pub fn time_of(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Builds a series sharing this one's rate and label.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        let mut out = TimeSeries::new(samples, self.sample_rate_hz)?;
        out.label = self.label.clone();
        Ok(out)
    }

    /// Keeps every `factor`-th sample, starting at the first. The sample
    /// rate is divided accordingly.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("decimation factor must be at least 1"));
        }
        let samples = self.samples.iter().step_by(factor).copied().collect();
        let mut out = TimeSeries::new(samples, self.sample_rate_hz / factor as f64)?;
        out.label = self.label.clone();
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Affine map of the samples onto `[0, 1]`: `(x - min) / (max - min)`.
pub fn normalize_unit(ts: &TimeSeries) -> Result<TimeSeries> {
    let (min, max) = ts
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = max - min;
    if range <= 0.0 {
        return Err(Error::ZeroDynamicRange(min));
    }
    let samples = ts
        .samples()
        .iter()
        // the max maps to exactly 1 even when (max - min) / range rounds
        .map(|&x| if x == max { 1.0 } else { (x - min) / range })
        .collect();
    ts.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(matches!(TimeSeries::new(vec![], 1.0), Err(Error::NoSamples)));
        assert!(TimeSeries::new(vec![1.0], 0.0).is_err());
        assert!(TimeSeries::new(vec![1.0], f64::NAN).is_err());
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::INFINITY], 1.0),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn uniform_time_axis() {
        let t = TimeSeries::new(vec![0.0; 4], 1000.0).unwrap();
        assert_eq!(t.time_of(3), 0.003);
        assert_eq!(t.duration_s(), 0.004);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_unit(&ts(&[2.0, 4.0, 6.0])).unwrap().samples(), &[0.0, 0.5, 1.0]);
        assert_eq!(normalize_unit(&ts(&[0.0, 1.0])).unwrap().samples(), &[0.0, 1.0]);
        assert!(matches!(
            normalize_unit(&ts(&[5.0, 5.0, 5.0])),
            Err(Error::ZeroDynamicRange(_))
        ));
    }

    #[test]
    fn decimate_keeps_every_kth() {
        let t = TimeSeries::new((0..10).map(f64::from).collect(), 10.0).unwrap();
        let d = t.decimate(3).unwrap();
        assert_eq!(d.samples(), &[0.0, 3.0, 6.0, 9.0]);
        assert!((d.sample_rate_hz() - 10.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(v in prop::collection::vec(-1e6f64..1e6, 2..64)) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let once = normalize_unit(&ts(&v)).unwrap();
            let twice = normalize_unit(&once).unwrap();
            prop_assert_eq!(once.samples(), twice.samples());
            let min = once.samples().iter().cloned().fold(f64::INFINITY, f64::min);
            let max = once.samples().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(min, 0.0);
            prop_assert_eq!(max, 1.0);
        }
    }
}
