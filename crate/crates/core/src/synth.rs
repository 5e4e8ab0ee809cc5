//! Colored-noise synthesis with the generalized Wiener filter
//! `H(z) = (1 - z^-1)^(-alpha/2)`.
//!
//! The filter's impulse response follows the recursion
//! `h[0] = 1`, `h[j] = (alpha/2 + j - 1) h[j-1] / j`, and a length-`M`
//! colored sequence is the truncated causal convolution
//! `eta[i] = sum_{j=0..=i} h[j] w[i-j]` of i.i.d. Gaussian `w`. The power
//! spectrum of `eta` falls as `1/f^alpha`: `alpha = 0` is white noise,
//! `alpha = 1` flicker and `alpha = 2` a random walk.
//!
//! # Gaussian generator
//!
//! Unit normals come from a ChaCha8 stream seeded with `seed_from_u64`,
//! turned into pairs by the Marsaglia polar method. Each candidate uses two
//! 64-bit draws mapped to `[-1, 1)` through their top 53 bits; the logarithm
//! is the portable `libm` one, so the stream is identical on every platform.

use std::sync::Arc;

use rand::RngCore;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlannerScalar};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::TimeSeries;

/// Above this length the filter is applied with FFTs.
pub const DIRECT_LIMIT: usize = 1 << 13;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterWeights {
    pub alpha: f64,
    pub h: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 2], got {alpha}")));
    }
    Ok(())
}

pub fn wiener_weights(alpha: f64, m: usize) -> Result<FilterWeights> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::invalid("filter length must be at least 1"));
    }
    let mut h = Vec::with_capacity(m);
    h.push(1.0);
    for j in 1..m {
        let jf = j as f64;
        h.push((alpha / 2.0 + jf - 1.0) * h[j - 1] / jf);
    }
    Ok(FilterWeights { alpha, h })
}

/// Unit-variance Gaussian stream (see the module docs for the algorithm).
pub fn unit_normals(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut uniform = move || {
        let bits = rng.next_u64() >> 11;
        2.0 * (bits as f64 * (1.0 / (1u64 << 53) as f64)) - 1.0
    };
    let mut out = Vec::with_capacity(length + 1);
    while out.len() < length {
        let (u, v) = (uniform(), uniform());
        let s = u * u + v * v;
        if s >= 1.0 || s == 0.0 {
            continue;
        }
        let factor = (-2.0 * libm::log(s) / s).sqrt();
        out.push(u * factor);
        out.push(v * factor);
    }
    out.truncate(length);
    out
}

/// i.i.d. zero-mean Gaussian samples with standard deviation `sigma`,
/// at a nominal 1 Hz sample rate.
pub fn gaussian_white(length: usize, sigma: f64, seed: u64) -> Result<TimeSeries> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let z = unit_normals(length, seed);
    TimeSeries::new(z.into_iter().map(|v| sigma * v).collect(), 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMethod {
    /// Direct sum up to [`DIRECT_LIMIT`] samples, FFT beyond.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// `eta[i] = sum_{j=0..=i} h[j] w[i-j]`, computed term by term.
pub fn causal_filter_direct(h: &[f64], w: &[f64]) -> Vec<f64> {
    (0..w.len())
        .map(|i| {
            h[..=i.min(h.len() - 1)]
                .iter()
                .enumerate()
                .map(|(j, &hj)| hj * w[i - j])
                .sum()
        })
        .collect()
}

/// The same truncated convolution through a zero-padded FFT of length
/// `>= 2M - 1`, so no wrap-around reaches the first `M` outputs.
pub fn causal_filter_fft(h: &[f64], w: &[f64]) -> Vec<f64> {
    let m = w.len();
    let size = (2 * m).saturating_sub(1).max(1).next_power_of_two();
    let mut planner = FftPlannerScalar::<f64>::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().take(m).map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut hb = pad(h);
    let mut wb = pad(w);
    forward.process(&mut hb);
    forward.process(&mut wb);
    for (a, b) in wb.iter_mut().zip(&hb) {
        *a *= b;
    }
    inverse.process(&mut wb);
    let scale = 1.0 / size as f64;
    wb[..m].iter().map(|c| c.re * scale).collect()
}

/// Colors a unit-variance driving sequence. The endpoints take exact
/// shortcuts: `alpha = 0` is the identity and `alpha = 2` a running sum.
pub fn color(alpha: f64, w: &[f64], method: ConvolutionMethod) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if w.is_empty() {
        return Ok(Vec::new());
    }
    if alpha == 0.0 {
        return Ok(w.to_vec());
    }
    if alpha == 2.0 {
        let mut acc = 0.0;
        return Ok(w
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect());
    }
    let h = wiener_weights(alpha, w.len())?.h;
    let direct = match method {
        ConvolutionMethod::Auto => w.len() <= DIRECT_LIMIT,
        ConvolutionMethod::Direct => true,
        ConvolutionMethod::Fft => false,
    };
    Ok(if direct {
        causal_filter_direct(&h, w)
    } else {
        causal_filter_fft(&h, w)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub alpha: f64,
    /// Standard deviation of the driving white noise.
    pub sigma: f64,
    pub weight: f64,
}

/// A sum of independently seeded colored components plus a DC level.
///
/// Component `i` is driven by the stream seeded with `seed + i`, so adding
/// a component leaves the existing ones untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecipe {
    pub components: Vec<ComponentSpec>,
    pub length: usize,
    pub seed: u64,
    #[serde(default)]
    pub mean: f64,
    /// Leading samples generated and then dropped (the start of a
    /// fractional-noise sequence is a transient).
    #[serde(default)]
    pub discard_prefix: usize,
    #[serde(default = "one")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub method: ConvolutionMethod,
}

fn one() -> f64 {
    1.0
}

impl NoiseRecipe {
    pub fn single(alpha: f64, sigma: f64, length: usize, seed: u64) -> Self {
        NoiseRecipe {
            components: vec![ComponentSpec {
                alpha,
                sigma,
                weight: 1.0,
            }],
            length,
            seed,
            mean: 0.0,
            discard_prefix: 0,
            sample_rate_hz: 1.0,
            method: ConvolutionMethod::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::invalid("noise length must be at least 1"));
        }
        if self.components.is_empty() {
            return Err(Error::invalid("recipe has no components"));
        }
        for c in &self.components {
            check_alpha(c.alpha)?;
            if !(c.sigma.is_finite() && c.sigma > 0.0) {
                return Err(Error::invalid(format!("sigma must be positive, got {}", c.sigma)));
            }
            if !c.weight.is_finite() {
                return Err(Error::invalid("component weight must be finite"));
            }
        }
        if !self.mean.is_finite() {
            return Err(Error::invalid("mean must be finite"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(())
    }
}

/// One component, before weighting: `sigma * color(alpha, z)`.
pub fn synthesize_component(
    spec: &ComponentSpec,
    length: usize,
    discard_prefix: usize,
    seed: u64,
    method: ConvolutionMethod,
) -> Result<Vec<f64>> {
    let z = unit_normals(length + discard_prefix, seed);
    let colored = color(spec.alpha, &z, method)?;
    Ok(colored[discard_prefix..].iter().map(|v| spec.sigma * v).collect())
}

pub fn synthesize(recipe: &NoiseRecipe) -> Result<TimeSeries> {
    recipe.validate()?;
    let mut out = vec![0.0; recipe.length];
    for (i, spec) in recipe.components.iter().enumerate() {
        let eta = synthesize_component(
            spec,
            recipe.length,
            recipe.discard_prefix,
            recipe.seed.wrapping_add(i as u64),
            recipe.method,
        )?;
        for (o, e) in out.iter_mut().zip(eta) {
            *o += spec.weight * e;
        }
    }
    for o in &mut out {
        *o += recipe.mean;
    }
    TimeSeries::new(out, recipe.sample_rate_hz)
}
