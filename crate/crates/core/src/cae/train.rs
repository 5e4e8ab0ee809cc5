use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use super::model::CaeModel;
use crate::dataset::DenoisingPair;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Max-norm bound on first-layer kernels.
    pub max_norm: Option<f64>,
    /// Fraction of pairs held out for evaluation.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 50,
            adam: AdamConfig::default(),
            seed: 0,
            max_norm: Some(4.0),
            holdout_fraction: 0.3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::invalid("holdout fraction must be in [0, 1)"));
        }
        if let Some(m) = self.max_norm {
            if m.is_nan() || m <= 0.0 {
                return Err(Error::invalid("max norm must be positive"));
            }
        }
        self.adam.validate()
    }
}

/// Stream counters under the training seed.
const SPLIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
}

/// Seeded split: a shuffled index list whose first `round(n * fraction)`
/// entries are held out. Both halves are returned sorted.
pub fn split_indices(n: usize, holdout_fraction: f64, seed: u64) -> DataSplit {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed::sub_seed(seed, SPLIT_STREAM)));
    let n_hold = ((n as f64) * holdout_fraction).round() as usize;
    let mut holdout = idx[..n_hold].to_vec();
    let mut train = idx[n_hold..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    DataSplit { train, holdout }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Size-weighted mean of the batch losses seen during the epoch.
    pub train_loss: f64,
    /// Loss on the held-out pairs after the epoch.
    pub holdout_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: CaeModel,
    pub initial_train_loss: f64,
    pub initial_holdout_loss: Option<f64>,
    pub history: Vec<EpochStats>,
    pub split: DataSplit,
}

fn as_batch<'a>(data: &'a [DenoisingPair], idx: &[usize]) -> Vec<(&'a [f64], &'a [f64])> {
    idx.iter()
        .map(|&i| (data[i].noisy.samples(), data[i].clean.samples()))
        .collect()
}

fn check_dataset(model: &CaeModel, data: &[DenoisingPair], batch_size: usize) -> Result<()> {
    if data.len() < batch_size {
        return Err(Error::invalid(format!(
            "dataset has {} pairs, fewer than the batch size {batch_size}",
            data.len()
        )));
    }
    let len = model.input_length();
    for (i, pair) in data.iter().enumerate() {
        for s in [&pair.noisy, &pair.clean] {
            if s.len() != len {
                return Err(Error::Shape {
                    layer: "input".into(),
                    message: format!("pair {i} has {} samples, architecture expects {len}", s.len()),
                });
            }
        }
        if pair.clean.samples().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("pair {i}: clean signal is not normalized to [0, 1]")));
        }
    }
    Ok(())
}

/// Mini-batch Adam on mean binary cross-entropy.
///
/// The held-out split, the per-epoch shuffles and therefore the whole loss
/// history are functions of `cfg.seed`; the initial weights are whatever
/// `model` carries.
pub fn train(mut model: CaeModel, data: &[DenoisingPair], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    check_dataset(&model, data, cfg.batch_size)?;

    let split = split_indices(data.len(), cfg.holdout_fraction, cfg.seed);
    let holdout = as_batch(data, &split.holdout);
    let holdout_loss = |m: &CaeModel| -> Result<Option<f64>> {
        if holdout.is_empty() {
            Ok(None)
        } else {
            m.loss(&holdout).map(Some)
        }
    };

    let initial_train_loss = model.loss(&as_batch(data, &split.train))?;
    let initial_holdout_loss = holdout_loss(&model)?;

    let mut rng = seed::rng(seed::sub_seed(cfg.seed, SHUFFLE_STREAM));
    let mut state = model.optimizer_state();
    let mut order = split.train.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = as_batch(data, chunk);
            let (loss, grads) = model.loss_and_gradients(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            weighted += loss * chunk.len() as f64;
            model.apply_update(&grads, &mut state, &cfg.adam, cfg.max_norm);
        }
        model.epochs += 1;
        history.push(EpochStats {
            epoch: model.epochs,
            train_loss: weighted / order.len() as f64,
            holdout_loss: holdout_loss(&model)?,
        });
    }
    Ok(TrainReport {
        model,
        initial_train_loss,
        initial_holdout_loss,
        history,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_complete() {
        let a = split_indices(200, 0.3, 9);
        assert_eq!(a, split_indices(200, 0.3, 9));
        assert_ne!(a, split_indices(200, 0.3, 10));
        assert_eq!(a.holdout.len(), 60);
        let mut all: Vec<usize> = a.train.iter().chain(&a.holdout).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { holdout_fraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { max_norm: Some(0.0), ..Default::default() }.validate().is_err());
    }
}
