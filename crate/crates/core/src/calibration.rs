//! Choosing the loss weight that meets a target SLA violation rate.
//!
//! Candidate weights are each used to train a fresh model; the model's
//! violation rate and overprovisioning are measured on the validation slice.
//! A doubling grid from 1 brackets the target, then golden-section steps in
//! log-weight refine inside the bracket.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{overprovisioning_volume, sla_violation_rate};
use crate::nn::{train, ForecastModel, LossConfig, ModelData, TrainConfig};

/// Slack on the validation violation rate, as a fraction.
pub const DEFAULT_TOLERANCE: f64 = 0.015;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub tolerance: f64,
    /// Initial weights, ascending; must contain 1.
    pub grid: Vec<f64>,
    pub refine_steps: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            grid: (0..7).map(|k| 2f64.powi(k)).collect(),
            refine_steps: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub w: f64,
    /// Validation violation rate as a fraction.
    pub violation_rate: f64,
    /// Validation unconditional overprovisioning, raw units.
    pub overprovisioning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub target: f64,
    pub w: f64,
    pub violation_rate: f64,
    pub overprovisioning: f64,
    /// False when no searched weight met `target + tolerance`.
    pub satisfied: bool,
    pub tolerance: f64,
    /// Every evaluated weight in ascending order.
    pub trace: Vec<TracePoint>,
}

/// Raw-unit validation predictions and actuals for a model.
pub fn validation_predictions(model: &ForecastModel, data: &ModelData) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ws = model.workspace();
    let s = model.target_scaler();
    let mut pred = Vec::with_capacity(data.val.len());
    let mut actual = Vec::with_capacity(data.val.len());
    for sample in &data.val {
        pred.push(s.invert(model.forward(&mut ws, &sample.window)?));
        actual.push(s.invert(sample.target));
    }
    Ok((pred, actual))
}

struct Candidate {
    point: TracePoint,
    model: ForecastModel,
}

/// Trains and scores candidate weights for one recipe, remembering every
/// evaluation so several targets can share the same runs.
pub struct Calibrator<'a> {
    data: &'a ModelData,
    hidden: usize,
    layers: usize,
    train: TrainConfig,
    evaluated: Mutex<BTreeMap<u64, Candidate>>,
}

impl<'a> Calibrator<'a> {
    pub fn new(data: &'a ModelData, hidden: usize, layers: usize, train: TrainConfig) -> Self {
        Self {
            data,
            hidden,
            layers,
            train,
            evaluated: Mutex::new(BTreeMap::new()),
        }
    }

    fn key(w: f64) -> u64 {
        w.to_bits()
    }

    fn evaluate(&self, w: f64) -> Result<TracePoint> {
        if let Some(c) = self.evaluated.lock().unwrap().get(&Self::key(w)) {
            return Ok(c.point);
        }
        let model = train(self.data, self.hidden, self.layers, &self.train, &LossConfig::new(w)?)?;
        let (pred, actual) = validation_predictions(&model, self.data)?;
        let point = TracePoint {
            w,
            violation_rate: sla_violation_rate(&pred, &actual)? / 100.0,
            overprovisioning: overprovisioning_volume(&pred, &actual)?.unconditional,
        };
        self.evaluated
            .lock()
            .unwrap()
            .insert(Self::key(w), Candidate { point, model });
        Ok(point)
    }

    fn evaluate_all(&self, ws: &[f64]) -> Result<Vec<TracePoint>> {
        ws.par_iter().map(|w| self.evaluate(*w)).collect()
    }

    /// Model trained with weight `w`, if it was evaluated.
    pub fn model(&self, w: f64) -> Option<ForecastModel> {
        self.evaluated
            .lock()
            .unwrap()
            .get(&Self::key(w))
            .map(|c| c.model.clone())
    }

    pub fn calibrate(&self, target: f64, settings: &CalibrationSettings) -> Result<(CalibrationResult, ForecastModel)> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::Config(format!("target violation rate must lie in (0, 1), got {target}")));
        }
        if settings.grid.is_empty() {
            return Err(Error::EmptySearchRange);
        }
        if !settings.grid.contains(&1.0) || settings.grid.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config("weight grid must be ascending and contain 1".into()));
        }
        let coarse = self.evaluate_all(&settings.grid)?;

        if let Some(hi) = coarse.iter().position(|p| p.violation_rate <= target) {
            if hi > 0 {
                self.golden_refine(target, coarse[hi - 1].w.ln(), coarse[hi].w.ln(), settings.refine_steps)?;
            }
        }

        let mut trace: Vec<TracePoint> = self.evaluated.lock().unwrap().values().map(|c| c.point).collect();
        trace.sort_by(|a, b| a.w.total_cmp(&b.w));
        let chosen = select(&trace, target, settings.tolerance);
        let satisfied = chosen.violation_rate <= target + settings.tolerance;
        let mut model = self.model(chosen.w).expect("chosen weight was evaluated");
        model.loss = LossConfig::for_target(chosen.w, target)?;
        Ok((
            CalibrationResult {
                target,
                w: chosen.w,
                violation_rate: chosen.violation_rate,
                overprovisioning: chosen.overprovisioning,
                satisfied,
                tolerance: settings.tolerance,
                trace,
            },
            model,
        ))
    }

    /// Golden-section minimization, over log-weight in `[a, b]`, of
    /// overprovisioning plus a steep penalty for exceeding the target rate.
    fn golden_refine(&self, target: f64, mut a: f64, mut b: f64, steps: usize) -> Result<()> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let scale = self
            .evaluated
            .lock()
            .unwrap()
            .values()
            .map(|c| c.point.overprovisioning)
            .fold(0.0, f64::max)
            .max(1e-12);
        let objective = |p: TracePoint| p.overprovisioning + 100.0 * scale * (p.violation_rate - target).max(0.0);
        if steps == 0 {
            return Ok(());
        }
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = objective(self.evaluate(c.exp())?);
        let mut fd = objective(self.evaluate(d.exp())?);
        for _ in 1..steps {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = objective(self.evaluate(c.exp())?);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = objective(self.evaluate(d.exp())?);
            }
        }
        Ok(())
    }
}

/// Selection rule over evaluated weights: lowest overprovisioning among
/// weights meeting the target; failing that, among weights within tolerance;
/// failing that, the lowest violation rate. Ties go to the smaller weight.
pub fn select(trace: &[TracePoint], target: f64, tolerance: f64) -> TracePoint {
    let best_volume = |limit: f64| {
        trace
            .iter()
            .filter(|p| p.violation_rate <= limit)
            .min_by(|a, b| a.overprovisioning.total_cmp(&b.overprovisioning).then(a.w.total_cmp(&b.w)))
            .copied()
    };
    best_volume(target)
        .or_else(|| best_volume(target + tolerance))
        .unwrap_or_else(|| {
            *trace
                .iter()
                .min_by(|a, b| a.violation_rate.total_cmp(&b.violation_rate).then(a.w.total_cmp(&b.w)))
                .expect("trace is nonempty")
        })
}

/// One-shot calibration of a single target.
pub fn calibrate_weight(
    target: f64,
    data: &ModelData,
    hidden: usize,
    layers: usize,
    train_cfg: &TrainConfig,
    settings: &CalibrationSettings,
) -> Result<(CalibrationResult, ForecastModel)> {
    Calibrator::new(data, hidden, layers, *train_cfg).calibrate(target, settings)
}

/// Best constant forecast under the weighted loss, found by brute force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantOracle {
    pub c: f64,
    /// Fraction of samples strictly above `c`.
    pub violation_rate: f64,
    pub loss: f64,
}

/// Scans every sample value as a candidate constant and keeps the one with the
/// lowest mean weighted loss (smallest value on ties).
pub fn constant_predictor_oracle(samples: &[f64], w: f64) -> Result<ConstantOracle> {
    LossConfig::new(w)?;
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let n = samples.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    for &c in &sorted {
        let loss = samples
            .iter()
            .map(|x| {
                let e = c - x;
                if e <= 0.0 {
                    -w * e
                } else {
                    e
                }
            })
            .sum::<f64>()
            / n;
        if best.is_none_or(|(_, l)| loss < l) {
            best = Some((c, loss));
        }
    }
    let (c, loss) = best.unwrap();
    let violations = samples.iter().filter(|x| **x > c).count();
    Ok(ConstantOracle {
        c,
        violation_rate: violations as f64 / n,
        loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hundred() -> Vec<f64> {
        (1..=100).map(f64::from).collect()
    }

    #[test]
    fn oracle_examples() {
        let m = constant_predictor_oracle(&hundred(), 1.0).unwrap();
        assert_eq!(m.c, 50.0);
        assert_eq!(m.violation_rate, 0.5);
        let q = constant_predictor_oracle(&hundred(), 19.0).unwrap();
        assert_eq!(q.c, 95.0);
        assert!((q.violation_rate - 0.05).abs() < 1e-12);
        let two = constant_predictor_oracle(&[0.0, 10.0], 3.0).unwrap();
        assert_eq!(two.c, 10.0);
        assert!(constant_predictor_oracle(&[], 1.0).is_err());
        assert!(constant_predictor_oracle(&[1.0], 0.0).is_err());
    }

    #[test]
    fn analytic_weights() {
        // Violation rate 1/(1+w) at the optimum: w = (1-p)/p.
        let w = |p: f64| (1.0 - p) / p;
        assert!((w(0.05) - 19.0).abs() < 1e-12);
        assert!((w(0.03) - 32.333_333).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn oracle_is_order_statistic(
            raw in prop::collection::btree_set(-10_000i64..10_000, 1..120),
            w in 0.05f64..60.0,
        ) {
            let xs: Vec<f64> = raw.iter().map(|v| *v as f64 * 0.01).collect();
            let n = xs.len() as f64;
            let k = (n * w / (1.0 + w)).ceil() as usize;
            prop_assume!(((n * w / (1.0 + w)) - (k as f64)).abs() > 1e-9 || k >= 1);
            let o = constant_predictor_oracle(&xs, w).unwrap();
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(o.c, sorted[k.max(1) - 1]);
        }

        #[test]
        fn oracle_rate_non_increasing_in_weight(
            xs in prop::collection::vec(-100f64..100.0, 1..80),
            w1 in 0.05f64..60.0,
            w2 in 0.05f64..60.0,
        ) {
            let (lo, hi) = if w1 < w2 { (w1, w2) } else { (w2, w1) };
            let a = constant_predictor_oracle(&xs, lo).unwrap();
            let b = constant_predictor_oracle(&xs, hi).unwrap();
            prop_assert!(b.violation_rate <= a.violation_rate);
        }
    }

    fn tp(w: f64, rate: f64, vol: f64) -> TracePoint {
        TracePoint {
            w,
            violation_rate: rate,
            overprovisioning: vol,
        }
    }

    #[test]
    fn selection_rule() {
        let trace = [tp(1.0, 0.5, 1.0), tp(8.0, 0.06, 3.0), tp(16.0, 0.045, 4.0), tp(32.0, 0.02, 6.0)];
        assert_eq!(select(&trace, 0.05, 0.015).w, 16.0);
        // Nothing at or below target: fall back to the tolerance band.
        assert_eq!(select(&trace, 0.01, 0.015).w, 32.0);
        assert_eq!(select(&trace[..2], 0.03, 0.015).w, 8.0);
    }
}
