//! Strided 1D convolution and its transpose, with hand-written backward
//! passes.
//!
//! A convolution layer with `k` taps, stride `s` and zero padding `p` maps
//! `x[in_c][len]` to
//!
//! ```text
//! y[o][t] = b[o] + sum_{i, q} W[o][i][q] * x[i][t*s + q - p]
//! ```
//!
//! (cross-correlation; out-of-range inputs read as zero), with
//! `len_out = (len + 2p - k) / s + 1`. The transposed layer scatters each
//! input sample through the kernel instead:
//!
//! ```text
//! y[o][t*s + q - p] += W[i][o][q] * z[i][t]
//! ```
//!
//! keeping only outputs in `0..out_len`. With shared weights and no bias it
//! is the exact adjoint of the convolution whose input length is `out_len`.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the pre-activation and output values.
    pub fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    ConvTranspose,
}

/// One convolutional or transposed-convolutional layer.
///
/// Weights are laid out `[out][in][k]` for `Conv` and `[in][out][k]` for
/// `ConvTranspose`, so a convolution and its adjoint can share one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// Output length for `ConvTranspose`; unused by `Conv`.
    pub out_len: usize,
    pub activation: Activation,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &Layer) -> Self {
        LayerGrad {
            weight: vec![0.0; layer.weight.len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }
}

impl Layer {
    pub fn conv(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
    ) -> Self {
        Layer {
            kind: LayerKind::Conv,
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            out_len: 0,
            activation,
            weight: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn conv_transpose(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        out_len: usize,
        activation: Activation,
    ) -> Self {
        Layer {
            kind: LayerKind::ConvTranspose,
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            out_len,
            activation,
            weight: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    /// Length of the output for an input of `len` samples.
    pub fn output_length(&self, len: usize) -> Option<usize> {
        match self.kind {
            LayerKind::Conv => {
                let padded = len + 2 * self.padding;
                (padded >= self.kernel && self.stride > 0).then(|| (padded - self.kernel) / self.stride + 1)
            }
            LayerKind::ConvTranspose => Some(self.out_len),
        }
    }

    #[inline]
    fn w_index(&self, out_c: usize, in_c: usize, q: usize) -> usize {
        match self.kind {
            LayerKind::Conv => (out_c * self.in_channels + in_c) * self.kernel + q,
            LayerKind::ConvTranspose => (in_c * self.out_channels + out_c) * self.kernel + q,
        }
    }

    fn check_input(&self, x: &Tensor1D, name: &str) -> Result<usize> {
        let shape_err = |message: String| Error::Shape {
            layer: name.to_string(),
            message,
        };
        if x.channels() != self.in_channels {
            return Err(shape_err(format!(
                "expected {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        let out_len = self
            .output_length(x.length())
            .ok_or_else(|| shape_err(format!("input length {} shorter than kernel {}", x.length(), self.kernel)))?;
        if self.kind == LayerKind::ConvTranspose && out_len == 0 {
            return Err(shape_err("zero output length".into()));
        }
        Ok(out_len)
    }

    /// Affine part of the layer (before the activation).
    pub fn forward_linear(&self, x: &Tensor1D, name: &str) -> Result<Tensor1D> {
        let out_len = self.check_input(x, name)?;
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let mut y = Tensor1D::zeros(self.out_channels, out_len);
        match self.kind {
            LayerKind::Conv => {
                let len = x.length();
                for o in 0..self.out_channels {
                    let row = y.row_mut(o);
                    row.fill(self.bias[o]);
                    for i in 0..self.in_channels {
                        let w = &self.weight[self.w_index(o, i, 0)..][..k];
                        let xi = x.row(i);
                        for (t, acc) in row.iter_mut().enumerate() {
                            for (q, &wq) in w.iter().enumerate() {
                                let u = t * s + q;
                                if u >= p && u - p < len {
                                    *acc += wq * xi[u - p];
                                }
                            }
                        }
                    }
                }
            }
            LayerKind::ConvTranspose => {
                for o in 0..self.out_channels {
                    y.row_mut(o).fill(self.bias[o]);
                }
                for i in 0..self.in_channels {
                    let zi = x.row(i);
                    for o in 0..self.out_channels {
                        let w = &self.weight[self.w_index(o, i, 0)..][..k];
                        let row = y.row_mut(o);
                        for (t, &zv) in zi.iter().enumerate() {
                            for (q, &wq) in w.iter().enumerate() {
                                let u = t * s + q;
                                if u >= p && u - p < out_len {
                                    row[u - p] += wq * zv;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(y)
    }

    /// Forward pass, returning `(pre_activation, output)`.
    pub fn forward(&self, x: &Tensor1D, name: &str) -> Result<(Tensor1D, Tensor1D)> {
        let pre = self.forward_linear(x, name)?;
        let mut out = pre.clone();
        if self.activation != Activation::Identity {
            for v in out.data_mut() {
                *v = self.activation.apply(*v);
            }
        }
        Ok((pre, out))
    }

    /// Accumulates parameter gradients into `grad` given the gradient with
    /// respect to the pre-activation output, and returns the gradient with
    /// respect to the input.
    pub fn backward_linear(&self, x: &Tensor1D, grad_pre: &Tensor1D, grad: &mut LayerGrad) -> Tensor1D {
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let mut gx = Tensor1D::zeros(x.channels(), x.length());
        for o in 0..self.out_channels {
            grad.bias[o] += grad_pre.row(o).iter().sum::<f64>();
        }
        match self.kind {
            LayerKind::Conv => {
                let len = x.length();
                for o in 0..self.out_channels {
                    let go = grad_pre.row(o);
                    for i in 0..self.in_channels {
                        let base = self.w_index(o, i, 0);
                        let xi = x.row(i);
                        for q in 0..k {
                            let wq = self.weight[base + q];
                            let mut gw = 0.0;
                            let gxi = gx.row_mut(i);
                            for (t, &g) in go.iter().enumerate() {
                                let u = t * s + q;
                                if u >= p && u - p < len {
                                    gw += g * xi[u - p];
                                    gxi[u - p] += wq * g;
                                }
                            }
                            grad.weight[base + q] += gw;
                        }
                    }
                }
            }
            LayerKind::ConvTranspose => {
                let out_len = grad_pre.length();
                for i in 0..self.in_channels {
                    let zi = x.row(i);
                    for o in 0..self.out_channels {
                        let base = self.w_index(o, i, 0);
                        let go = grad_pre.row(o);
                        for q in 0..k {
                            let wq = self.weight[base + q];
                            let mut gw = 0.0;
                            let gzi = gx.row_mut(i);
                            for (t, &zv) in zi.iter().enumerate() {
                                let u = t * s + q;
                                if u >= p && u - p < out_len {
                                    gw += zv * go[u - p];
                                    gzi[t] += wq * go[u - p];
                                }
                            }
                            grad.weight[base + q] += gw;
                        }
                    }
                }
            }
        }
        gx
    }

    /// Gradient through the activation: `grad_out * act'(pre)`.
    pub fn activation_backward(&self, pre: &Tensor1D, out: &Tensor1D, grad_out: &Tensor1D) -> Tensor1D {
        if self.activation == Activation::Identity {
            return grad_out.clone();
        }
        let data = pre
            .data()
            .iter()
            .zip(out.data())
            .zip(grad_out.data())
            .map(|((&z, &a), &g)| g * self.activation.derivative(z, a))
            .collect();
        Tensor1D::from_vec(pre.channels(), pre.length(), data).expect("same shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(kind: LayerKind, kernel: &[f64], stride: usize, padding: usize, out_len: usize) -> Layer {
        let mut l = match kind {
            LayerKind::Conv => Layer::conv(1, 1, kernel.len(), stride, padding, Activation::Identity),
            LayerKind::ConvTranspose => {
                Layer::conv_transpose(1, 1, kernel.len(), stride, padding, out_len, Activation::Identity)
            }
        };
        l.weight = kernel.to_vec();
        l
    }

    #[test]
    fn identity_kernel() {
        let l = single(LayerKind::Conv, &[0.0, 1.0, 0.0], 1, 1, 0);
        let y = l.forward_linear(&Tensor1D::signal(&[1.0, 2.0, 3.0]), "t").unwrap();
        assert_eq!(y.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn strided_padded_conv() {
        let l = single(LayerKind::Conv, &[1.0, 1.0, 1.0], 2, 1, 0);
        let y = l.forward_linear(&Tensor1D::signal(&[1.0; 4]), "t").unwrap();
        assert_eq!(y.data(), &[2.0, 3.0]);
    }

    #[test]
    fn relu_clips() {
        let mut l = single(LayerKind::Conv, &[1.0], 1, 0, 0);
        l.activation = Activation::Relu;
        let (_, y) = l.forward(&Tensor1D::signal(&[-1.0, 2.0]), "t").unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn single_scatter() {
        let l = single(LayerKind::ConvTranspose, &[1.0, 1.0], 2, 0, 2);
        let y = l.forward_linear(&Tensor1D::signal(&[1.0]), "t").unwrap();
        assert_eq!(y.data(), &[1.0, 1.0]);
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut l = Layer::conv_transpose(2, 3, 3, 2, 1, 7, Activation::Identity);
        l.weight.iter_mut().enumerate().for_each(|(i, w)| *w = i as f64);
        l.bias = vec![0.5, -1.0, 2.0];
        let y = l.forward_linear(&Tensor1D::zeros(2, 4), "t").unwrap();
        for o in 0..3 {
            assert!(y.row(o).iter().all(|&v| v == l.bias[o]));
        }
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let l = Layer::conv(2, 1, 3, 1, 0, Activation::Identity);
        let err = l.forward_linear(&Tensor1D::zeros(1, 8), "encoder.0").unwrap_err();
        assert!(err.to_string().contains("encoder.0"));
        let err = l.forward_linear(&Tensor1D::zeros(2, 2), "encoder.0").unwrap_err();
        assert!(err.to_string().contains("shorter than kernel"));
    }

    /// Dense matrix of the single-channel conv, built from one-hot inputs.
    fn conv_matrix(l: &Layer, len: usize) -> Vec<Vec<f64>> {
        (0..len)
            .map(|j| {
                let mut e = vec![0.0; len];
                e[j] = 1.0;
                l.forward_linear(&Tensor1D::signal(&e), "m").unwrap().into_data()
            })
            .collect()
    }

    #[test]
    fn transpose_matches_explicit_matrix_transpose() {
        let conv = single(LayerKind::Conv, &[1.0, 1.0, 1.0], 2, 1, 0);
        for len in 3..=8 {
            let cols = conv_matrix(&conv, len);
            let out_len = cols[0].len();
            let tr = single(LayerKind::ConvTranspose, &[1.0, 1.0, 1.0], 2, 1, len);
            for r in 0..out_len {
                let mut e = vec![0.0; out_len];
                e[r] = 1.0;
                let y = tr.forward_linear(&Tensor1D::signal(&e), "m").unwrap();
                let expected: Vec<f64> = (0..len).map(|j| cols[j][r]).collect();
                assert_eq!(y.data(), expected.as_slice(), "len {len} row {r}");
            }
        }
    }

    #[test]
    fn adjoint_identity_multichannel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let in_c = rng.random_range(1..4);
            let out_c = rng.random_range(1..4);
            let k = rng.random_range(1..5);
            let s = rng.random_range(1..4);
            let p = rng.random_range(0..k);
            let len = rng.random_range(1..=8);
            let mut conv = Layer::conv(in_c, out_c, k, s, p, Activation::Identity);
            let Some(out_len) = conv.output_length(len) else { continue };
            conv.weight.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
            let mut tr = Layer::conv_transpose(out_c, in_c, k, s, p, len, Activation::Identity);
            tr.weight = conv.weight.clone();
            let x = Tensor1D::from_vec(in_c, len, (0..in_c * len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let y = Tensor1D::from_vec(out_c, out_len, (0..out_c * out_len).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap();
            let lhs = conv.forward_linear(&x, "c").unwrap().dot(&y);
            let rhs = x.dot(&tr.forward_linear(&y, "t").unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }
}
