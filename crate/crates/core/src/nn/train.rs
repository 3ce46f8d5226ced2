use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{wmae_grad, wmae_unchecked};
use super::{ForecastModel, LossConfig, LstmParams, LstmSpec, Workspace};
use crate::data::{windows_for_targets, Sample, Stats};
use crate::error::{Error, Result};
use crate::features::{FeatureRecipe, InputMatrix};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Optimization settings. The optimizer is Adam with its usual decay constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on every parameter.
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-3,
            epochs: 20,
            l2: 0.0,
            batch_size: 32,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.epochs == 0 || self.batch_size == 0 || !(self.l2 >= 0.0) {
            return Err(Error::Config(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Per-epoch mean loss on the training samples and, when given, validation samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork {
    pub spec: LstmSpec,
    pub params: LstmParams,
    pub history: TrainHistory,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Mean loss of `params` over `samples`.
pub(crate) fn evaluate(ws: &mut Workspace, params: &LstmParams, samples: &[Sample], w: f64) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|s| wmae_unchecked(ws.forward_unchecked(&params.values, &s.window) - s.target, w))
        .sum();
    total / samples.len() as f64
}

/// Mini-batch BPTT on already-normalized samples, minimizing mean loss plus
/// `l2 * |params|^2`. Fully deterministic for a given seed and sample order.
pub fn train_network(
    spec: &LstmSpec,
    samples: &[Sample],
    val: Option<&[Sample]>,
    cfg: &TrainConfig,
    loss: &LossConfig,
) -> Result<TrainedNetwork> {
    spec.validate()?;
    cfg.validate()?;
    LossConfig::new(loss.w)?;
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    for s in samples.iter().chain(val.unwrap_or_default()) {
        if s.window.len() != spec.window_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} window values", spec.window_len()),
                actual: s.window.len().to_string(),
            });
        }
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut params = LstmParams::init(spec, &mut init_rng);
    let mut grad = vec![0.0; params.values.len()];
    let mut adam = Adam::new(params.values.len(), cfg.learning_rate);
    let mut ws = Workspace::new(spec);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &samples[i];
                let err = ws.forward_unchecked(&params.values, &s.window) - s.target;
                total += wmae_unchecked(err, loss.w);
                ws.backward(&params.values, scale * wmae_grad(err, loss.w), &mut grad);
            }
            if cfg.l2 > 0.0 {
                for (g, p) in grad.iter_mut().zip(&params.values) {
                    *g += 2.0 * cfg.l2 * p;
                }
            }
            adam.update(&mut params.values, &grad);
        }
        let train_loss = total / samples.len() as f64;
        if !train_loss.is_finite() || params.values.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: train_loss,
            });
        }
        history.train_loss.push(train_loss);
        if let Some(val) = val.filter(|v| !v.is_empty()) {
            let v = evaluate(&mut ws, &params, val, loss.w);
            if !v.is_finite() {
                return Err(Error::Divergence { epoch, loss: v });
            }
            history.val_loss.push(v);
        }
    }
    Ok(TrainedNetwork {
        spec: *spec,
        params,
        history,
    })
}

/// Normalized training material for one recipe.
#[derive(Clone, Debug)]
pub struct ModelData {
    pub recipe: FeatureRecipe,
    pub scalers: Vec<Stats>,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
}

impl ModelData {
    /// Scales `matrix` with statistics of `train` and cuts one-hour-ahead
    /// samples whose targets fall in each range.
    pub fn new(recipe: &FeatureRecipe, matrix: &InputMatrix, train: Range<usize>, val: Range<usize>) -> Result<Self> {
        if recipe.width() != matrix.width() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} input columns", recipe.width()),
                actual: matrix.width().to_string(),
            });
        }
        let scalers = matrix.fit_scalers(train.clone())?;
        let scaled = matrix.scaled(&scalers)?;
        let cols = scaled.column_slices();
        let target = cols[0];
        let train_samples = windows_for_targets(&cols, target, train, recipe.lookback)?;
        let val_samples = windows_for_targets(&cols, target, val, recipe.lookback)?;
        Ok(Self {
            recipe: recipe.clone(),
            scalers,
            train: train_samples,
            val: val_samples,
        })
    }

    pub fn spec(&self, hidden: usize, layers: usize) -> Result<LstmSpec> {
        LstmSpec::new(self.recipe.width(), hidden, layers, self.recipe.lookback)
    }
}

/// Trains a forecaster for the recipe held by `data`.
pub fn train(
    data: &ModelData,
    hidden: usize,
    layers: usize,
    cfg: &TrainConfig,
    loss: &LossConfig,
) -> Result<ForecastModel> {
    let spec = data.spec(hidden, layers)?;
    let val = (!data.val.is_empty()).then_some(data.val.as_slice());
    let net = train_network(&spec, &data.train, val, cfg, loss)?;
    Ok(ForecastModel::new(net, data.scalers.clone(), data.recipe.clone(), *loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn samples(n: usize, spec: &LstmSpec, target: impl Fn(usize, &mut ChaCha8Rng) -> f64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..n)
            .map(|i| Sample {
                window: (0..spec.window_len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                target: target(i, &mut rng),
                target_index: i,
            })
            .collect()
    }

    #[test]
    fn fits_constant_target() {
        let spec = LstmSpec::new(2, 4, 1, 6).unwrap();
        let data = samples(200, &spec, |_, _| 0.0);
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            epochs: 40,
            ..TrainConfig::default()
        };
        let net = train_network(&spec, &data, None, &cfg, &LossConfig::mae()).unwrap();
        let mut ws = Workspace::new(&spec);
        let mae = evaluate(&mut ws, &net.params, &data, 1.0);
        assert!(mae < 0.05, "mae {mae}");
        assert_eq!(net.history.train_loss.len(), 40);
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = LstmSpec::new(1, 3, 2, 4).unwrap();
        let data = samples(64, &spec, |i, _| (i as f64 * 0.1).sin());
        let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
        let a = train_network(&spec, &data, Some(&data[..8]), &cfg, &LossConfig::mae()).unwrap();
        let b = train_network(&spec, &data, Some(&data[..8]), &cfg, &LossConfig::mae()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.val_loss.len(), 3);
        let c = train_network(&spec, &data, None, &TrainConfig { seed: 2, ..cfg }, &LossConfig::mae()).unwrap();
        assert_ne!(a.params, c.params);
    }

    /// With iid targets the inputs carry no signal, so the best the network can
    /// do is a constant at the w/(1+w) quantile; for w = 19 that is 0.95.
    #[test]
    fn heavy_weight_lands_near_upper_quantile() {
        let spec = LstmSpec::new(1, 4, 1, 4).unwrap();
        let data = samples(2000, &spec, |_, r| r.random_range(0.0..1.0));
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            epochs: 60,
            batch_size: 64,
            ..TrainConfig::default()
        };
        let net = train_network(&spec, &data, None, &cfg, &LossConfig::new(19.0).unwrap()).unwrap();
        let mut ws = Workspace::new(&spec);
        let preds: Vec<f64> = data.iter().map(|s| ws.forward(&net.params, &s.window).unwrap()).collect();
        let mean = preds.iter().sum::<f64>() / preds.len() as f64;
        let rate = data.iter().zip(&preds).filter(|(s, p)| **p < s.target).count() as f64 / data.len() as f64;
        assert!((mean - 0.95).abs() < 0.05, "mean prediction {mean}");
        assert!((0.02..=0.09).contains(&rate), "violation rate {rate}");
    }

    #[test]
    fn l2_shrinks_parameters() {
        let spec = LstmSpec::new(1, 3, 1, 4).unwrap();
        let data = samples(100, &spec, |i, _| (i % 5) as f64);
        let base = TrainConfig { epochs: 10, learning_rate: 1e-2, ..TrainConfig::default() };
        let free = train_network(&spec, &data, None, &base, &LossConfig::mae()).unwrap();
        let tied = train_network(&spec, &data, None, &TrainConfig { l2: 10.0, ..base }, &LossConfig::mae()).unwrap();
        assert!(tied.params.squared_norm() < free.params.squared_norm());
    }

    #[test]
    fn divergence_is_reported() {
        let spec = LstmSpec::new(1, 2, 1, 2).unwrap();
        let mut data = samples(10, &spec, |_, _| 0.0);
        data[3].target = f64::NAN;
        let err = train_network(&spec, &data, None, &TrainConfig { epochs: 2, ..TrainConfig::default() }, &LossConfig::mae());
        assert!(matches!(err, Err(Error::Divergence { epoch: 0, .. })));
    }

    #[test]
    fn rejects_empty_and_bad_config() {
        let spec = LstmSpec::new(1, 2, 1, 2).unwrap();
        assert!(train_network(&spec, &[], None, &TrainConfig::default(), &LossConfig::mae()).is_err());
        let data = samples(4, &spec, |_, _| 0.0);
        let bad = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_network(&spec, &data, None, &bad, &LossConfig::mae()).is_err());
    }
}
