use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::layers::{Activation, Layer, LayerGrad, LayerKind};
use super::loss::{bce_logit_grad, bce_prob_grad, bce_term};
use super::tensor::Tensor1D;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub filters: usize,
    pub kernel_size: usize,
    pub stride: usize,
}

impl LayerSpec {
    /// Symmetric zero padding that keeps stride-`s` layers at `ceil(len / s)`.
    pub fn padding(&self) -> usize {
        (self.kernel_size - 1) / 2
    }
}

/// Encoder layer list plus the final single-filter reconstruction layer.
///
/// The decoder is derived: one transposed convolution per encoder layer,
/// in reverse, each restoring the length its encoder counterpart consumed
/// and carrying that layer's filter count. A stride-1 transposed layer with
/// one filter and a sigmoid then produces the `input_length` output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaeArchitecture {
    pub input_length: usize,
    pub encoder: Vec<LayerSpec>,
    pub output_kernel: usize,
}

impl CaeArchitecture {
    /// Two stride-2 encoder layers of 128 and 32 filters, kernel 3.
    pub fn reference(input_length: usize) -> Self {
        Self::with_filters(input_length, &[128, 32])
    }

    pub fn with_filters(input_length: usize, filters: &[usize]) -> Self {
        CaeArchitecture {
            input_length,
            encoder: filters
                .iter()
                .map(|&f| LayerSpec {
                    filters: f,
                    kernel_size: 3,
                    stride: 2,
                })
                .collect(),
            output_kernel: 3,
        }
    }

    /// Signal length entering each encoder layer, followed by the latent length.
    pub fn encoder_lengths(&self) -> Result<Vec<usize>> {
        let mut lens = vec![self.input_length];
        for (i, spec) in self.encoder.iter().enumerate() {
            let len = *lens.last().unwrap();
            let padded = len + 2 * spec.padding();
            if padded < spec.kernel_size {
                return Err(Error::Shape {
                    layer: format!("encoder.{i}"),
                    message: format!("input length {len} too short for kernel {}", spec.kernel_size),
                });
            }
            lens.push((padded - spec.kernel_size) / spec.stride + 1);
        }
        Ok(lens)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0 {
            return Err(Error::invalid("input length must be positive"));
        }
        if self.encoder.is_empty() {
            return Err(Error::invalid("architecture needs at least one encoder layer"));
        }
        for spec in &self.encoder {
            if spec.filters == 0 || spec.kernel_size == 0 || spec.stride == 0 {
                return Err(Error::invalid(format!("degenerate encoder layer {spec:?}")));
            }
        }
        if self.output_kernel == 0 || self.output_kernel.is_multiple_of(2) {
            return Err(Error::invalid("output kernel must be odd"));
        }
        self.encoder_lengths().map(|_| ())
    }

    /// Zero-initialized layers in forward order.
    pub fn build_layers(&self) -> Result<Vec<Layer>> {
        self.validate()?;
        let lens = self.encoder_lengths()?;
        let mut layers = Vec::new();
        let mut channels = 1;
        for spec in &self.encoder {
            layers.push(Layer::conv(
                channels,
                spec.filters,
                spec.kernel_size,
                spec.stride,
                spec.padding(),
                Activation::Relu,
            ));
            channels = spec.filters;
        }
        for (i, spec) in self.encoder.iter().enumerate().rev() {
            layers.push(Layer::conv_transpose(
                channels,
                spec.filters,
                spec.kernel_size,
                spec.stride,
                spec.padding(),
                lens[i],
                Activation::Relu,
            ));
            channels = spec.filters;
        }
        layers.push(Layer::conv_transpose(
            channels,
            1,
            self.output_kernel,
            1,
            (self.output_kernel - 1) / 2,
            self.input_length,
            Activation::Sigmoid,
        ));
        Ok(layers)
    }

    pub fn layer_name(&self, index: usize) -> String {
        let n = self.encoder.len();
        if index < n {
            format!("encoder.{index}")
        } else if index < 2 * n {
            format!("decoder.{}", index - n)
        } else {
            "output".to_string()
        }
    }
}

/// Parameters are drawn uniformly from `[-b, b]` with `b = sqrt(6 / fan_in)`
/// for ReLU layers and `b = sqrt(3 / fan_in)` for the sigmoid output,
/// `fan_in = in_channels * kernel`; biases start at zero. Layers are filled
/// in forward order from one ChaCha8 stream.
pub const INIT_SCHEME: &str = "uniform-fan-in/relu:sqrt(6/fan_in)/sigmoid:sqrt(3/fan_in)/bias:0/chacha8";

/// A convolutional autoencoder and its training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CaeModel {
    pub architecture: CaeArchitecture,
    pub layers: Vec<Layer>,
    pub seed: u64,
    pub epochs: usize,
}

/// Per-layer parameter gradients, in forward layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &CaeModel) -> Self {
        Gradients {
            layers: model.layers.iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.iter_mut().zip(&b.weight).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x *= factor);
        }
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }
}

/// Activations recorded by a forward pass.
struct Trace {
    inputs: Vec<Tensor1D>,
    pres: Vec<Tensor1D>,
    outputs: Vec<Tensor1D>,
}

impl CaeModel {
    pub fn new(architecture: CaeArchitecture, seed: u64) -> Result<Self> {
        let mut layers = architecture.build_layers()?;
        let mut rng = seed::rng(seed);
        for layer in &mut layers {
            let fan_in = (layer.in_channels * layer.kernel) as f64;
            let bound = match layer.activation {
                Activation::Sigmoid => (3.0 / fan_in).sqrt(),
                _ => (6.0 / fan_in).sqrt(),
            };
            for w in &mut layer.weight {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(CaeModel {
            architecture,
            layers,
            seed,
            epochs: 0,
        })
    }

    /// All weights and biases zero.
    pub fn zeros(architecture: CaeArchitecture) -> Result<Self> {
        let layers = architecture.build_layers()?;
        Ok(CaeModel {
            architecture,
            layers,
            seed: 0,
            epochs: 0,
        })
    }

    pub fn input_length(&self) -> usize {
        self.architecture.input_length
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn optimizer_state(&self) -> AdamState {
        AdamState::new(self.blocks().iter().map(|b| b.len()))
    }

    fn check_length(&self, len: usize) -> Result<()> {
        if len != self.input_length() {
            return Err(Error::Shape {
                layer: "input".into(),
                message: format!("model expects {} samples, got {len}", self.input_length()),
            });
        }
        Ok(())
    }

    fn trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_length(input.len())?;
        let mut trace = Trace {
            inputs: Vec::with_capacity(self.layers.len()),
            pres: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        let mut x = Tensor1D::signal(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (pre, out) = layer.forward(&x, &self.architecture.layer_name(i))?;
            if out.first_non_finite().is_some() {
                return Err(Error::NonFiniteActivation { layer: i });
            }
            trace.inputs.push(x);
            trace.pres.push(pre);
            x = out.clone();
            trace.outputs.push(out);
        }
        Ok(trace)
    }

    /// Reconstructs one signal.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.trace(input)?;
        Ok(trace.outputs.pop().expect("at least one layer").into_data())
    }

    /// Summed (not averaged) loss and gradients for one pair.
    fn sample_gradients(&self, input: &[f64], target: &[f64]) -> Result<(f64, Gradients)> {
        self.check_length(target.len())?;
        let trace = self.trace(input)?;
        let last = self.layers.len() - 1;
        let pred = trace.outputs[last].data();
        let loss: f64 = pred.iter().zip(target).map(|(&p, &t)| bce_term(p, t)).sum();

        let mut grads = Gradients::zeros_like(self);
        let output_layer = &self.layers[last];
        let mut grad_pre = if output_layer.activation == Activation::Sigmoid {
            let g = pred.iter().zip(target).map(|(&p, &t)| bce_logit_grad(p, t)).collect();
            Tensor1D::from_vec(1, pred.len(), g)?
        } else {
            let g = pred.iter().zip(target).map(|(&p, &t)| bce_prob_grad(p, t)).collect();
            let g = Tensor1D::from_vec(1, pred.len(), g)?;
            output_layer.activation_backward(&trace.pres[last], &trace.outputs[last], &g)
        };
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let grad_in = layer.backward_linear(&trace.inputs[i], &grad_pre, &mut grads.layers[i]);
            if i > 0 {
                grad_pre = self.layers[i - 1].activation_backward(&trace.pres[i - 1], &trace.outputs[i - 1], &grad_in);
            }
        }
        Ok((loss, grads))
    }

    /// Mean binary cross-entropy over every sample of every pair, and its
    /// exact gradient. Pairs are processed in parallel; their contributions
    /// are summed in index order so the result does not depend on
    /// scheduling.
    pub fn loss_and_gradients(&self, batch: &[(&[f64], &[f64])]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::NoSamples);
        }
        let parts: Vec<(f64, Gradients)> = batch
            .par_iter()
            .map(|(x, t)| self.sample_gradients(x, t))
            .collect::<Result<_>>()?;
        let mut total = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (l, g) in &parts {
            loss += l;
            total.add(g);
        }
        let count = (batch.len() * self.input_length()) as f64;
        total.scale(1.0 / count);
        Ok((loss / count, total))
    }

    /// Mean loss without gradients.
    pub fn loss(&self, batch: &[(&[f64], &[f64])]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::NoSamples);
        }
        let sums: Vec<f64> = batch
            .par_iter()
            .map(|(x, t)| {
                self.check_length(t.len())?;
                let pred = self.forward(x)?;
                Ok(pred.iter().zip(t.iter()).map(|(&p, &t)| bce_term(p, t)).sum())
            })
            .collect::<Result<_>>()?;
        Ok(sums.iter().sum::<f64>() / (batch.len() * self.input_length()) as f64)
    }

    /// Adam update followed by the max-norm constraint on the first
    /// encoder layer: each filter's kernel (all input channels and taps) is
    /// rescaled onto the ball of radius `max_norm` if it left it.
    pub fn apply_update(
        &mut self,
        grads: &Gradients,
        state: &mut AdamState,
        adam: &AdamConfig,
        max_norm: Option<f64>,
    ) {
        let g = grads.blocks();
        adam_step(&mut self.blocks_mut(), &g, state, adam);
        if let Some(limit) = max_norm {
            apply_max_norm(&mut self.layers[0], limit);
        }
    }
}

pub fn apply_max_norm(layer: &mut Layer, limit: f64) {
    debug_assert_eq!(layer.kind, LayerKind::Conv);
    let per_filter = layer.in_channels * layer.kernel;
    for filter in layer.weight.chunks_mut(per_filter) {
        let norm = filter.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm > limit {
            let s = limit / norm;
            filter.iter_mut().for_each(|w| *w *= s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes() {
        let arch = CaeArchitecture::reference(2317);
        assert_eq!(arch.encoder_lengths().unwrap(), vec![2317, 1159, 580]);
        let layers = arch.build_layers().unwrap();
        assert_eq!(layers.len(), 5);
        assert_eq!((layers[0].in_channels, layers[0].out_channels), (1, 128));
        assert_eq!((layers[1].in_channels, layers[1].out_channels), (128, 32));
        assert_eq!((layers[2].in_channels, layers[2].out_channels, layers[2].out_len), (32, 32, 1159));
        assert_eq!((layers[3].in_channels, layers[3].out_channels, layers[3].out_len), (32, 128, 2317));
        assert_eq!((layers[4].in_channels, layers[4].out_channels, layers[4].stride), (128, 1, 1));
    }

    #[test]
    fn output_length_equals_input_length() {
        for len in [16, 63, 64, 100, 255, 256, 257, 511, 512] {
            let model = CaeModel::new(CaeArchitecture::with_filters(len, &[4, 2]), 1).unwrap();
            assert_eq!(model.forward(&vec![0.5; len]).unwrap().len(), len);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let model = CaeModel::new(CaeArchitecture::with_filters(32, &[2]), 1).unwrap();
        assert!(matches!(model.forward(&[0.0; 31]), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_net_is_stationary_for_half_targets() {
        let model = CaeModel::zeros(CaeArchitecture::with_filters(16, &[4, 2])).unwrap();
        let x = vec![0.3; 16];
        let t = vec![0.5; 16];
        let (loss, grads) = model.loss_and_gradients(&[(&x, &t)]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(grads.layers.last().unwrap().bias.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicated_batch_same_gradient() {
        let model = CaeModel::new(CaeArchitecture::with_filters(16, &[4, 2]), 5).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let t: Vec<f64> = (0..16).map(|i| f64::from(i % 5 == 0)).collect();
        let (l1, g1) = model.loss_and_gradients(&[(&x, &t)]).unwrap();
        let (l2, g2) = model.loss_and_gradients(&[(&x, &t), (&x, &t)]).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn max_norm_rescales_only_large_filters() {
        let mut l = Layer::conv(1, 2, 2, 1, 0, Activation::Relu);
        l.weight = vec![3.0, 4.0, 0.3, 0.4];
        apply_max_norm(&mut l, 1.0);
        assert!((l.weight[0] - 0.6).abs() < 1e-15 && (l.weight[1] - 0.8).abs() < 1e-15);
        assert_eq!(&l.weight[2..], &[0.3, 0.4]);
    }

    #[test]
    fn init_is_seeded() {
        let arch = CaeArchitecture::with_filters(32, &[4, 2]);
        assert_eq!(CaeModel::new(arch.clone(), 3).unwrap(), CaeModel::new(arch.clone(), 3).unwrap());
        assert_ne!(CaeModel::new(arch.clone(), 3).unwrap(), CaeModel::new(arch, 4).unwrap());
    }
}
