use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{wmae_grad, wmae_unchecked};
use super::{LossConfig, LstmParams, LstmSpec, Workspace};
use crate::error::Result;

const STEP: f64 = 1e-5;
const L2: f64 = 1e-3;
const SAMPLES: usize = 4;
/// Minimum |error| per sample so central differences never straddle the kink.
const KINK_MARGIN: f64 = 1e-3;
const DENOM_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub param_count: usize,
}

impl GradientCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

struct Problem {
    windows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

fn objective(ws: &mut Workspace, p: &[f64], prob: &Problem, w: f64) -> f64 {
    let data: f64 = prob
        .windows
        .iter()
        .zip(&prob.targets)
        .map(|(x, y)| wmae_unchecked(ws.forward_unchecked(p, x) - y, w))
        .sum::<f64>()
        / prob.windows.len() as f64;
    data + L2 * p.iter().map(|v| v * v).sum::<f64>()
}

fn analytic(ws: &mut Workspace, p: &[f64], prob: &Problem, w: f64) -> Vec<f64> {
    let mut grad = vec![0.0; p.len()];
    let scale = 1.0 / prob.windows.len() as f64;
    for (x, y) in prob.windows.iter().zip(&prob.targets) {
        let err = ws.forward_unchecked(p, x) - y;
        ws.backward(p, scale * wmae_grad(err, w), &mut grad);
    }
    for (g, v) in grad.iter_mut().zip(p) {
        *g += 2.0 * L2 * v;
    }
    grad
}

/// Compares BPTT gradients of the regularized training objective against
/// central finite differences on random data. Intended for tiny specs.
pub fn check_gradients(spec: &LstmSpec, loss: &LossConfig, seed: u64) -> Result<GradientCheck> {
    check_gradients_with(spec, loss, seed, |_| {})
}

/// As [`check_gradients`], with `mutate` applied to the analytic gradient
/// before comparison.
pub fn check_gradients_with(
    spec: &LstmSpec,
    loss: &LossConfig,
    seed: u64,
    mutate: impl FnOnce(&mut [f64]),
) -> Result<GradientCheck> {
    spec.validate()?;
    LossConfig::new(loss.w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = LstmParams::init(spec, &mut rng);
    let p = &params.values;
    let mut ws = Workspace::new(spec);
    let windows: Vec<Vec<f64>> = (0..SAMPLES)
        .map(|_| (0..spec.window_len()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let targets = windows
        .iter()
        .map(|x| {
            let y_hat = ws.forward_unchecked(p, x);
            loop {
                let y: f64 = rng.random_range(-1.0..1.0);
                if (y_hat - y).abs() > KINK_MARGIN {
                    break y;
                }
            }
        })
        .collect();
    let prob = Problem { windows, targets };

    let mut grad = analytic(&mut ws, p, &prob, loss.w);
    mutate(&mut grad);

    let mut probe = p.clone();
    let mut worst = (0.0, 0);
    for (k, g) in grad.iter().enumerate() {
        let orig = probe[k];
        probe[k] = orig + STEP;
        let up = objective(&mut ws, &probe, &prob, loss.w);
        probe[k] = orig - STEP;
        let down = objective(&mut ws, &probe, &prob, loss.w);
        probe[k] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(DENOM_FLOOR);
        if rel > worst.0 {
            worst = (rel, k);
        }
    }
    Ok(GradientCheck {
        max_rel_error: worst.0,
        worst_param: worst.1,
        param_count: p.len(),
    })
}
