use serde::{Deserialize, Serialize};

use crate::data::Stats;
use crate::error::{Error, Result};
use crate::nn::wmae;

fn check(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Percentage of instants where the prediction falls strictly below demand.
pub fn sla_violation_rate(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check(pred, actual)?;
    let violations = pred.iter().zip(actual).filter(|(p, a)| *p - *a < 0.0).count();
    Ok(100.0 * violations as f64 / pred.len() as f64)
}

/// Average positive prediction error under both averaging conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overprovisioning {
    /// Mean of `max(pred - actual, 0)` over every instant.
    pub unconditional: f64,
    /// Mean of `pred - actual` over overprovisioned instants only; 0 if none.
    pub conditional: f64,
}

pub fn overprovisioning_volume(pred: &[f64], actual: &[f64]) -> Result<Overprovisioning> {
    check(pred, actual)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (p, a) in pred.iter().zip(actual) {
        let e = p - a;
        if e > 0.0 {
            sum += e;
            count += 1;
        }
    }
    Ok(Overprovisioning {
        unconditional: sum / pred.len() as f64,
        conditional: if count == 0 { 0.0 } else { sum / count as f64 },
    })
}

/// Mean weighted loss after normalizing predictions and actuals with the
/// target's training statistics.
pub fn test_loss(pred: &[f64], actual: &[f64], target: &Stats, w: f64) -> Result<f64> {
    check(pred, actual)?;
    let mut total = 0.0;
    for (p, a) in pred.iter().zip(actual) {
        total += wmae(target.apply(*p) - target.apply(*a), w)?;
    }
    Ok(total / pred.len() as f64)
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / pred.len() as f64)
}
