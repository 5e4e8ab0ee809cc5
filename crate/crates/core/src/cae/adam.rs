use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("learning rate must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(crate::Error::InvalidParameter(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(crate::Error::InvalidParameter("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(block_sizes: impl IntoIterator<Item = usize>) -> Self {
        let sizes: Vec<usize> = block_sizes.into_iter().collect();
        AdamState {
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One bias-corrected Adam update over matching parameter and gradient blocks.
///
/// Panics if the block layout differs from the one `state` was built for.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, cfg: &AdamConfig) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient block count");
    assert_eq!(params.len(), state.m.len(), "optimizer state block count");
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - cfg.beta1.powi(t);
    let correction2 = 1.0 - cfg.beta2.powi(t);
    for (b, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[b], &mut state.v[b]);
        assert_eq!(p.len(), g.len(), "block {b} gradient size");
        assert_eq!(p.len(), m.len(), "block {b} state size");
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_once(p: &mut Vec<f64>, g: &[f64], state: &mut AdamState, cfg: &AdamConfig) {
        adam_step(&mut [p.as_mut_slice()], &[g], state, cfg);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        let cfg = AdamConfig::default();
        for g in [1e-3, 0.25, -7.0, 1e4] {
            let mut p = vec![0.0];
            let mut s = AdamState::new([1]);
            step_once(&mut p, &[g], &mut s, &cfg);
            let expected = -cfg.lr * g / (g.abs() + cfg.epsilon);
            assert!((p[0] - expected).abs() < 1e-15, "g={g}");
            assert!((p[0] + cfg.lr * g.signum()).abs() < 1e-9 + cfg.lr * cfg.epsilon / g.abs());
        }
    }

    #[test]
    fn zero_gradient_never_moves() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.3, -1.2];
        let mut s = AdamState::new([2]);
        for _ in 0..50 {
            step_once(&mut p, &[0.0, 0.0], &mut s, &cfg);
        }
        assert_eq!(p, vec![0.3, -1.2]);
    }

    #[test]
    fn identical_gradients_identical_updates() {
        let cfg = AdamConfig::default();
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new([2]);
        for k in 0..10 {
            let g = (k as f64 * 0.7).sin();
            step_once(&mut p, &[g, g], &mut s, &cfg);
        }
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(AdamConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(AdamConfig { beta2: 1.0, ..Default::default() }.validate().is_err());
    }
}
