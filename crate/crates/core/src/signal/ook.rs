use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Periodic on-off keying pattern: `n_pulses` periods of ON then OFF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OokPattern {
    pub on_duration_s: f64,
    pub off_duration_s: f64,
    pub amplitude_on: f64,
    pub amplitude_off: f64,
    pub n_pulses: usize,
}

impl OokPattern {
    /// 1 ms ON, 4 ms OFF, unit amplitude.
    pub fn vehicle_drl(n_pulses: usize) -> Self {
        OokPattern {
            on_duration_s: 1e-3,
            off_duration_s: 4e-3,
            amplitude_on: 1.0,
            amplitude_off: 0.0,
            n_pulses,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !(self.on_duration_s > 0.0 && self.off_duration_s > 0.0) {
            return Err(Error::invalid("OOK durations must be positive"));
        }
        if !unit.contains(&self.amplitude_on) || !unit.contains(&self.amplitude_off) {
            return Err(Error::invalid("OOK amplitudes must lie in [0, 1]"));
        }
        if self.amplitude_on <= self.amplitude_off {
            return Err(Error::invalid("OOK ON amplitude must exceed OFF amplitude"));
        }
        if self.n_pulses == 0 {
            return Err(Error::invalid("OOK pattern needs at least one pulse"));
        }
        Ok(())
    }

    /// Samples per (ON, OFF) segment at `fs`.
    pub fn segment_samples(&self, sample_rate_hz: f64) -> (usize, usize) {
        (
            duration_to_samples(self.on_duration_s, sample_rate_hz),
            duration_to_samples(self.off_duration_s, sample_rate_hz),
        )
    }

    pub fn period_samples(&self, sample_rate_hz: f64) -> usize {
        let (on, off) = self.segment_samples(sample_rate_hz);
        on + off
    }
}

/// floor(duration * fs). The 1e-9 relative guard keeps products such as
/// 0.29 * 100 = 28.999999999999996 from losing a sample.
fn duration_to_samples(duration_s: f64, sample_rate_hz: f64) -> usize {
    let exact = duration_s * sample_rate_hz;
    (exact + 1e-9 * exact.max(1.0)).floor() as usize
}

pub fn generate_ook(pattern: &OokPattern, sample_rate_hz: f64) -> Result<TimeSeries> {
    pattern.validate()?;
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let (on, off) = pattern.segment_samples(sample_rate_hz);
    if on == 0 || off == 0 {
        return Err(Error::invalid(format!(
            "OOK segment shorter than one sample at {sample_rate_hz} Hz (on={on}, off={off} samples)"
        )));
    }
    let mut samples = Vec::with_capacity(pattern.n_pulses * (on + off));
    for _ in 0..pattern.n_pulses {
        samples.extend(std::iter::repeat_n(pattern.amplitude_on, on));
        samples.extend(std::iter::repeat_n(pattern.amplitude_off, off));
    }
    TimeSeries::new(samples, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn drl_pattern_at_10khz() {
        let ts = generate_ook(&OokPattern::vehicle_drl(2), 10_000.0).unwrap();
        assert_eq!(ts.len(), 100);
        let one_period: Vec<f64> = std::iter::repeat_n(1.0, 10)
            .chain(std::iter::repeat_n(0.0, 40))
            .collect();
        assert_eq!(&ts.samples()[..50], one_period.as_slice());
        assert_eq!(&ts.samples()[50..], one_period.as_slice());
    }

    #[test]
    fn hand_countable() {
        let p = OokPattern {
            on_duration_s: 1.0,
            off_duration_s: 1.0,
            amplitude_on: 1.0,
            amplitude_off: 0.0,
            n_pulses: 1,
        };
        assert_eq!(generate_ook(&p, 2.0).unwrap().samples(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sub_sample_duration_is_rejected() {
        let p = OokPattern {
            on_duration_s: 1e-6,
            ..OokPattern::vehicle_drl(1)
        };
        assert!(generate_ook(&p, 1000.0).is_err());
    }

    #[test]
    fn representation_error_does_not_drop_samples() {
        assert_eq!(duration_to_samples(0.29, 100.0), 29);
    }

    #[test]
    fn amplitude_invariants() {
        let p = OokPattern {
            amplitude_on: 0.2,
            amplitude_off: 0.5,
            ..OokPattern::vehicle_drl(1)
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn length_law(on_ms in 1u32..20, off_ms in 1u32..20, n in 1usize..8, fs in 1000.0f64..20_000.0) {
            let p = OokPattern {
                on_duration_s: on_ms as f64 * 1e-3,
                off_duration_s: off_ms as f64 * 1e-3,
                amplitude_on: 1.0,
                amplitude_off: 0.0,
                n_pulses: n,
            };
            let ts = generate_ook(&p, fs).unwrap();
            let (a, b) = p.segment_samples(fs);
            prop_assert_eq!(ts.len(), n * (a + b));
        }
    }
}
