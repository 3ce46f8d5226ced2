use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the asymmetric loss and the violation rate it was calibrated for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub w: f64,
    /// Target SLA violation fraction, when the weight came from calibration.
    pub sla_target: Option<f64>,
}

impl LossConfig {
    pub fn new(w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::NonPositiveWeight(w));
        }
        Ok(Self { w, sla_target: None })
    }

    pub fn for_target(w: f64, sla_target: f64) -> Result<Self> {
        Ok(Self {
            sla_target: Some(sla_target),
            ..Self::new(w)?
        })
    }

    pub fn mae() -> Self {
        Self { w: 1.0, sla_target: None }
    }

    pub fn loss(&self, err: f64) -> f64 {
        wmae_unchecked(err, self.w)
    }

    pub fn grad(&self, err: f64) -> f64 {
        wmae_grad(err, self.w)
    }
}

#[inline]
pub(crate) fn wmae_unchecked(err: f64, w: f64) -> f64 {
    if err <= 0.0 {
        -w * err
    } else {
        err
    }
}

/// Weighted absolute error of `err = prediction - actual`: underprediction
/// (an SLA violation) costs `w` per unit, overprovisioning costs 1 per unit.
pub fn wmae(err: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::NonPositiveWeight(w));
    }
    Ok(wmae_unchecked(err, w))
}

/// Derivative of [`wmae`] in `err`; 0 at the kink.
#[inline]
pub fn wmae_grad(err: f64, w: f64) -> f64 {
    if err < 0.0 {
        -w
    } else if err > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Mean loss over paired errors.
pub fn mean_wmae(errors: impl IntoIterator<Item = f64>, w: f64) -> Result<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for e in errors {
        sum += wmae(e, w)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    Ok(sum / n as f64)
}
