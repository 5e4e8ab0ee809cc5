use crate::error::{Error, Result};

/// Multi-channel 1D signal stored channel-major: `data[c * length + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor1D {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor1D {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(Error::Shape {
                layer: "tensor".into(),
                message: format!("{} values for shape ({channels}, {length})", data.len()),
            });
        }
        Ok(Tensor1D {
            channels,
            length,
            data,
        })
    }

    /// A single-channel tensor.
    pub fn signal(samples: &[f64]) -> Self {
        Tensor1D {
            channels: 1,
            length: samples.len(),
            data: samples.to_vec(),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn dot(&self, other: &Tensor1D) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }
}
