//! Capture file formats.
//!
//! CSV: a `sample_rate_hz=<float>` line, an optional `label=<text>` line,
//! then one sample per line. JSON: `{"sample_rate_hz": f, "label": s?,
//! "samples": [f, ...]}`. Floats are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureFormat {
    Csv,
    Json,
}

impl CaptureFormat {
    /// Guesses the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CaptureFormat::Json,
            _ => CaptureFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CaptureFormat::Csv => "csv",
            CaptureFormat::Json => "json",
        }
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn load_capture(path: &Path, format: CaptureFormat) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    match format {
        CaptureFormat::Csv => parse_csv(&text),
        CaptureFormat::Json => parse_json(&text),
    }
}

pub fn save_capture(ts: &TimeSeries, path: &Path, format: CaptureFormat) -> Result<()> {
    let text = match format {
        CaptureFormat::Csv => to_csv(ts),
        CaptureFormat::Json => to_json(ts),
    };
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (line_no, first) = lines.next().ok_or(Error::MissingSampleRate)?;
    let rate_text = first
        .strip_prefix("sample_rate_hz=")
        .ok_or(Error::MissingSampleRate)?;
    let rate: f64 = rate_text.trim().parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("sample_rate_hz: cannot parse {rate_text:?} as a number"),
    })?;

    let mut label = None;
    let mut samples = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if samples.is_empty() && label.is_none() {
            if let Some(l) = line.strip_prefix("label=") {
                label = Some(l.to_string());
                continue;
            }
        }
        let x: f64 = line.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("sample: cannot parse {line:?} as a number"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("sample: non-finite value {line:?}"),
            });
        }
        samples.push(x);
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let ts = TimeSeries::new(samples, rate)?;
    Ok(match label {
        Some(l) => ts.with_label(l),
        None => ts,
    })
}

pub(crate) fn to_csv(ts: &TimeSeries) -> String {
    let mut out = String::with_capacity(ts.len() * 24 + 64);
    let _ = writeln!(out, "sample_rate_hz={}", fmt_f64(ts.sample_rate_hz()));
    if let Some(label) = ts.label() {
        let _ = writeln!(out, "label={label}");
    }
    for &x in ts.samples() {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct CaptureJson {
    sample_rate_hz: Option<f64>,
    label: Option<String>,
    samples: Vec<f64>,
}

pub(crate) fn parse_json(text: &str) -> Result<TimeSeries> {
    let raw: CaptureJson = serde_json::from_str(text)?;
    from_json_value(raw)
}

pub(crate) fn parse_json_value(value: serde_json::Value) -> Result<TimeSeries> {
    let raw: CaptureJson = serde_json::from_value(value)?;
    from_json_value(raw)
}

fn from_json_value(raw: CaptureJson) -> Result<TimeSeries> {
    let rate = raw.sample_rate_hz.ok_or(Error::MissingSampleRate)?;
    if raw.samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let ts = TimeSeries::new(raw.samples, rate)?;
    Ok(match raw.label {
        Some(l) => ts.with_label(l),
        None => ts,
    })
}

/// Single-line JSON with 17-digit floats.
pub(crate) fn to_json(ts: &TimeSeries) -> String {
    let mut out = String::with_capacity(ts.len() * 24 + 64);
    let _ = write!(out, "{{\"sample_rate_hz\":{}", fmt_f64(ts.sample_rate_hz()));
    if let Some(label) = ts.label() {
        let quoted = serde_json::to_string(label).expect("string serialization");
        let _ = write!(out, ",\"label\":{quoted}");
    }
    out.push_str(",\"samples\":[");
    for (i, &x) in ts.samples().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(x));
    }
    out.push_str("]}");
    out
}
