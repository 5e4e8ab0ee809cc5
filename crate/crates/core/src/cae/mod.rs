//! One-dimensional convolutional autoencoder for pulse denoising.
//!
//! The encoder is a stack of strided ReLU convolutions; the decoder mirrors
//! it with transposed convolutions and ends in a single-filter sigmoid
//! layer, so inputs and outputs are signals normalized to `[0, 1]`.
//! Training minimizes mean binary cross-entropy with Adam. Everything runs
//! in `f64` with analytic gradients.

mod adam;
mod io;
mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION, MAGIC};
pub use layers::{sigmoid, Activation, Layer, LayerGrad, LayerKind};
pub use loss::{bce_loss, BCE_CLAMP};
pub use model::{apply_max_norm, CaeArchitecture, CaeModel, Gradients, LayerSpec, INIT_SCHEME};
pub use tensor::Tensor1D;
pub use train::{split_indices, train, DataSplit, EpochStats, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// `sqrt(mean((clean - denoised)^2))`.
pub fn rmse(denoised: &TimeSeries, clean: &TimeSeries) -> Result<f64> {
    rmse_of(denoised.samples(), clean.samples())
}

pub fn rmse_of(denoised: &[f64], clean: &[f64]) -> Result<f64> {
    if denoised.len() != clean.len() {
        return Err(Error::LengthMismatch {
            expected: clean.len(),
            actual: denoised.len(),
        });
    }
    if clean.is_empty() {
        return Err(Error::NoSamples);
    }
    let sum: f64 = clean.iter().zip(denoised).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / clean.len() as f64).sqrt())
}

/// RMSE over all samples of several equally long signal pairs.
pub fn pooled_rmse<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (denoised, clean) in pairs {
        let r = rmse_of(denoised, clean)?;
        sum += r * r * clean.len() as f64;
        count += clean.len();
    }
    if count == 0 {
        return Err(Error::NoSamples);
    }
    Ok((sum / count as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(rmse_of(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 0.0);
        assert_eq!(rmse_of(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((rmse_of(&[1.0, 1.0], &[0.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(rmse_of(&[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn pooled_equals_concatenated() {
        let a = [0.1, 0.5, 0.9];
        let b = [0.0, 1.0, 1.0];
        let c = [0.3, 0.3, 0.3];
        let d = [0.0, 0.0, 1.0];
        let pooled = pooled_rmse([(&a[..], &b[..]), (&c[..], &d[..])]).unwrap();
        let cat = rmse_of(&[a, c].concat(), &[b, d].concat()).unwrap();
        assert!((pooled - cat).abs() < 1e-15);
    }
}
