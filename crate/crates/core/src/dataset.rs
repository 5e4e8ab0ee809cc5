//! Paired noisy/clean OOK records.
//!
//! Each pair is a window cut at a random phase from a pulse train. The
//! clean window keeps the pattern's amplitudes; the noisy window is the
//! same stretch of the received signal `R (x * h) + dc + v`, rescaled to
//! `[0, 1]` with [`normalize_unit`].
//!
//! On disk a dataset is a directory holding `manifest.json` and
//! `pairs.jsonl`, one `{"label", "noisy", "clean"}` record per line with
//! both signals in the JSON capture layout.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::capture::{parse_json_value, to_json};
use crate::signal::{apply_channel, generate_ook, normalize_unit, ChannelParams, OokPattern, TimeSeries};
use crate::synth::{synthesize, ComponentSpec, ConvolutionMethod, NoiseRecipe};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAIRS_FILE: &str = "pairs.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct DenoisingPair {
    pub noisy: TimeSeries,
    pub clean: TimeSeries,
    pub label: String,
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub label: String,
    pub count: usize,
    /// Samples per window.
    pub window_length: usize,
    pub sample_rate_hz: f64,
    /// Pulse shape; `n_pulses` is ignored, trains are as long as a window
    /// needs.
    pub pattern: OokPattern,
    pub channel: ChannelParams,
    /// Additive noise in signal units per sample.
    pub noise: Vec<ComponentSpec>,
    #[serde(default)]
    pub noise_mean: f64,
    #[serde(default)]
    pub discard_prefix: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// 1 ms / 4 ms unit pulses, identity channel, white plus random-walk
    /// noise, one pulse period per window.
    pub fn desk_scale(count: usize, window_length: usize, seed: u64) -> Self {
        let pattern = OokPattern::vehicle_drl(1);
        let period_s = pattern.on_duration_s + pattern.off_duration_s;
        DatasetSpec {
            label: "synthetic".into(),
            count,
            window_length,
            sample_rate_hz: window_length as f64 / period_s,
            pattern,
            channel: ChannelParams::default(),
            noise: vec![
                ComponentSpec { alpha: 0.0, sigma: 0.2, weight: 1.0 },
                ComponentSpec { alpha: 2.0, sigma: 0.01, weight: 1.0 },
            ],
            noise_mean: 0.0,
            discard_prefix: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("dataset count must be at least 1"));
        }
        if self.window_length < 2 {
            return Err(Error::invalid("window length must be at least 2"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        OokPattern { n_pulses: 1, ..self.pattern }.validate()?;
        let (on, off) = self.pattern.segment_samples(self.sample_rate_hz);
        if on == 0 || off == 0 {
            return Err(Error::invalid("OOK segment shorter than one sample"));
        }
        self.channel.validate()?;
        self.recipe(1, 0).validate()
    }

    fn recipe(&self, length: usize, seed: u64) -> NoiseRecipe {
        NoiseRecipe {
            components: self.noise.clone(),
            length,
            seed,
            mean: self.noise_mean,
            discard_prefix: self.discard_prefix,
            sample_rate_hz: self.sample_rate_hz,
            method: ConvolutionMethod::Auto,
        }
    }
}

/// Pair `i` draws everything from `sub_seed(spec.seed, i)`: its phase from
/// the first value of that stream, its noise from the derived recipe seed.
pub fn build_pair(spec: &DatasetSpec, index: usize) -> Result<DenoisingPair> {
    let pair_seed = seed::sub_seed(spec.seed, index as u64);
    let period = spec.pattern.period_samples(spec.sample_rate_hz);
    let phase = seed::rng(pair_seed).random_range(0..period);
    let n_pulses = (phase + spec.window_length).div_ceil(period);
    let train = generate_ook(&OokPattern { n_pulses, ..spec.pattern }, spec.sample_rate_hz)?;
    let noise = synthesize(&spec.recipe(train.len(), seed::sub_seed(pair_seed, 0)))?;
    let received = apply_channel(&train, &spec.channel, &noise)?;

    let window = phase..phase + spec.window_length;
    let clean = train.with_samples(train.samples()[window.clone()].to_vec())?;
    let noisy = normalize_unit(&received.with_samples(received.samples()[window].to_vec())?)?;
    Ok(DenoisingPair {
        noisy: noisy.with_label(spec.label.clone()),
        clean: clean.with_label(spec.label.clone()),
        label: spec.label.clone(),
    })
}

pub fn build_dataset(spec: &DatasetSpec) -> Result<Vec<DenoisingPair>> {
    spec.validate()?;
    (0..spec.count).map(|i| build_pair(spec, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub count: usize,
    pub window_length: usize,
    pub sample_rate_hz: f64,
    pub labels: Vec<String>,
    /// Generating spec, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<DatasetSpec>,
}

impl DatasetManifest {
    pub fn describe(pairs: &[DenoisingPair], spec: Option<&DatasetSpec>) -> Result<Self> {
        let first = pairs.first().ok_or(Error::NoSamples)?;
        let mut labels: Vec<String> = Vec::new();
        for p in pairs {
            if !labels.contains(&p.label) {
                labels.push(p.label.clone());
            }
        }
        Ok(DatasetManifest {
            format_version: DATASET_FORMAT_VERSION,
            count: pairs.len(),
            window_length: first.clean.len(),
            sample_rate_hz: first.clean.sample_rate_hz(),
            labels,
            spec: spec.cloned(),
        })
    }
}

/// Writes `manifest.json` and `pairs.jsonl` into `dir`, creating it.
pub fn save_dataset(pairs: &[DenoisingPair], spec: Option<&DatasetSpec>, dir: &Path) -> Result<DatasetManifest> {
    let manifest = DatasetManifest::describe(pairs, spec)?;
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    let mut out = BufWriter::new(fs::File::create(dir.join(PAIRS_FILE))?);
    for p in pairs {
        writeln!(
            out,
            "{{\"label\":{},\"noisy\":{},\"clean\":{}}}",
            serde_json::to_string(&p.label)?,
            to_json(&p.noisy).trim_end(),
            to_json(&p.clean).trim_end()
        )?;
    }
    out.flush()?;
    Ok(manifest)
}

#[derive(Deserialize)]
struct PairRecord {
    label: String,
    noisy: serde_json::Value,
    clean: serde_json::Value,
}

pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<DenoisingPair>)> {
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(manifest.format_version));
    }
    let reader = BufReader::new(fs::File::open(dir.join(PAIRS_FILE))?);
    let mut pairs = Vec::with_capacity(manifest.count);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        pairs.push(DenoisingPair {
            noisy: parse_json_value(record.noisy)?,
            clean: parse_json_value(record.clean)?,
            label: record.label,
        });
    }
    if pairs.len() != manifest.count {
        return Err(Error::LengthMismatch {
            expected: manifest.count,
            actual: pairs.len(),
        });
    }
    Ok((manifest, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_have_window_shape() {
        let spec = DatasetSpec::desk_scale(5, 64, 3);
        let pairs = build_dataset(&spec).unwrap();
        assert_eq!(pairs.len(), 5);
        for p in &pairs {
            assert_eq!(p.noisy.len(), 64);
            assert_eq!(p.clean.len(), 64);
            let max = p.noisy.samples().iter().cloned().fold(f64::MIN, f64::max);
            let min = p.noisy.samples().iter().cloned().fold(f64::MAX, f64::min);
            assert_eq!((min, max), (0.0, 1.0));
            assert!(p.clean.samples().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn per_pair_seeding() {
        let spec = DatasetSpec::desk_scale(4, 64, 3);
        let all = build_dataset(&spec).unwrap();
        assert_eq!(build_pair(&spec, 2).unwrap(), all[2]);
        let more = build_dataset(&DatasetSpec { count: 6, ..spec }).unwrap();
        assert_eq!(&more[..4], &all[..]);
    }

    #[test]
    fn single_pair() {
        assert_eq!(build_dataset(&DatasetSpec::desk_scale(1, 32, 0)).unwrap().len(), 1);
        assert!(build_dataset(&DatasetSpec::desk_scale(0, 32, 0)).is_err());
    }

    #[test]
    fn noiseless_identity_channel_gives_clean_signal() {
        let mut spec = DatasetSpec::desk_scale(3, 128, 1);
        spec.noise = vec![ComponentSpec { alpha: 0.0, sigma: 1e-300, weight: 0.0 }];
        for p in build_dataset(&spec).unwrap() {
            if p.clean.samples().iter().any(|&v| v != p.clean.samples()[0]) {
                assert_eq!(p.noisy.samples(), p.clean.samples());
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::desk_scale(3, 32, 8);
        let pairs = build_dataset(&spec).unwrap();
        let written = save_dataset(&pairs, Some(&spec), dir.path()).unwrap();
        let (manifest, back) = load_dataset(dir.path()).unwrap();
        assert_eq!(manifest, written);
        assert_eq!(manifest.labels, vec!["synthetic".to_string()]);
        assert_eq!(back, pairs);
    }
}
