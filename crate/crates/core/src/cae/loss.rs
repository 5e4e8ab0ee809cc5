use crate::error::{Error, Result};

/// Predictions are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the logs.
pub const BCE_CLAMP: f64 = 1e-7;

fn check(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::Shape {
            layer: "bce_loss".into(),
            message: format!("{} predictions for {} targets", pred.len(), target.len()),
        });
    }
    if pred.is_empty() {
        return Err(Error::NoSamples);
    }
    Ok(())
}

#[inline]
pub(crate) fn bce_term(p: f64, t: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// d(bce_term)/d(logit) for a sigmoid output `p`: `p - t`, or zero where
/// the clamp is active.
#[inline]
pub(crate) fn bce_logit_grad(p: f64, t: f64) -> f64 {
    if (BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
        p - t
    } else {
        0.0
    }
}

/// d(bce_term)/dp, zero where the clamp is active.
#[inline]
pub(crate) fn bce_prob_grad(p: f64, t: f64) -> f64 {
    if (BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
        -t / p + (1.0 - t) / (1.0 - p)
    } else {
        0.0
    }
}

/// Mean binary cross-entropy `-[t ln p + (1 - t) ln(1 - p)]`.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check(pred, target)?;
    let sum: f64 = pred.iter().zip(target).map(|(&p, &t)| bce_term(p, t)).sum();
    Ok(sum / pred.len() as f64)
}
