use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LossConfig, LstmParams, LstmSpec, TrainHistory, TrainedNetwork, Workspace};
use crate::data::Stats;
use crate::error::{Error, Result};
use crate::features::FeatureRecipe;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained network bundled with everything needed to feed it raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub format_version: u32,
    pub spec: LstmSpec,
    pub params: LstmParams,
    /// One per recipe column; the first scales DL volume.
    pub scalers: Vec<Stats>,
    pub recipe: FeatureRecipe,
    pub loss: LossConfig,
    pub history: TrainHistory,
}

impl ForecastModel {
    pub fn new(net: TrainedNetwork, scalers: Vec<Stats>, recipe: FeatureRecipe, loss: LossConfig) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            spec: net.spec,
            params: net.params,
            scalers,
            recipe,
            loss,
            history: net.history,
        }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(&self.spec)
    }

    pub fn target_scaler(&self) -> Stats {
        self.scalers[0]
    }

    /// Normalized-scale output for an already scaled window.
    pub fn forward(&self, ws: &mut Workspace, scaled_window: &[f64]) -> Result<f64> {
        ws.forward(&self.params, scaled_window)
    }

    /// Raw-unit prediction from a raw, row-major window.
    pub fn predict_raw(&self, ws: &mut Workspace, raw_window: &[f64]) -> Result<f64> {
        let width = self.spec.input_width;
        if raw_window.len() != self.spec.window_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} window values", self.spec.window_len()),
                actual: raw_window.len().to_string(),
            });
        }
        let scaled: Vec<f64> = raw_window
            .iter()
            .enumerate()
            .map(|(i, v)| self.scalers[i % width].apply(*v))
            .collect();
        Ok(self.target_scaler().invert(self.forward(ws, &scaled)?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format {} is not supported (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.spec.validate()?;
        if self.params.values.len() != self.spec.param_count()
            || self.scalers.len() != self.spec.input_width
            || self.recipe.width() != self.spec.input_width
        {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters and {} columns", self.spec.param_count(), self.spec.input_width),
                actual: format!("{} parameters and {} scalers", self.params.values.len(), self.scalers.len()),
            });
        }
        LossConfig::new(self.loss.w)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureRecipe;
    use proptest::prelude::*;

    fn model(values: Vec<f64>) -> ForecastModel {
        let spec = LstmSpec::new(1, 2, 1, 3).unwrap();
        let mut params = LstmParams::zeros(&spec);
        for (p, v) in params.values.iter_mut().zip(values.iter().cycle()) {
            *p = *v;
        }
        ForecastModel::new(
            TrainedNetwork {
                spec,
                params,
                history: TrainHistory::default(),
            },
            vec![Stats { mean: 3.5, std: 0.25 }],
            FeatureRecipe::univariate(3),
            LossConfig::for_target(19.0, 0.05).unwrap(),
        )
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL, 1..40)) {
            let m = model(values);
            let back = ForecastModel::from_json(&m.to_json().unwrap()).unwrap();
            for (a, b) in m.params.values.iter().zip(&back.params.values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn raw_prediction_inverts_scaling() {
        let mut m = model(vec![0.0]);
        *m.params.values.last_mut().unwrap() = 2.0;
        let mut ws = m.workspace();
        // Zero network: normalized output equals the head bias.
        assert_eq!(m.predict_raw(&mut ws, &[1.0, 2.0, 3.0]).unwrap(), 2.0 * 0.25 + 3.5);
        assert!(m.predict_raw(&mut ws, &[1.0]).is_err());
    }

    #[test]
    fn rejects_wrong_version() {
        let mut m = model(vec![0.1]);
        m.format_version = 99;
        assert!(ForecastModel::from_json(&m.to_json().unwrap()).is_err());
    }
}
