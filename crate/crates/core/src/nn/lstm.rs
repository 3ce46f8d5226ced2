use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a stacked LSTM with a scalar affine head on the last hidden state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LstmSpec {
    pub input_width: usize,
    pub hidden: usize,
    pub layers: usize,
    pub lookback: usize,
}

impl LstmSpec {
    pub fn new(input_width: usize, hidden: usize, layers: usize, lookback: usize) -> Result<Self> {
        let spec = Self {
            input_width,
            hidden,
            layers,
            lookback,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.hidden == 0 || self.layers == 0 || self.lookback == 0 {
            return Err(Error::Config(format!("LSTM dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_width
        } else {
            self.hidden
        }
    }

    fn layer_len(&self, layer: usize) -> usize {
        let h = self.hidden;
        4 * h * (self.layer_input(layer) + h) + 4 * h
    }

    /// Offset of layer `layer`'s gate matrix; its bias follows the matrix.
    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.layer_len(l)).sum()
    }

    fn head_offset(&self) -> usize {
        self.layer_offset(self.layers)
    }

    pub fn param_count(&self) -> usize {
        self.head_offset() + self.hidden + 1
    }

    pub fn window_len(&self) -> usize {
        self.lookback * self.input_width
    }
}

/// All trainable values in one flat vector.
///
/// Per layer: a `4H x (in + H)` row-major gate matrix (input, forget, cell,
/// output blocks) followed by a `4H` bias; then `H` head weights and a head bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub values: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(spec: &LstmSpec) -> Self {
        Self {
            values: vec![0.0; spec.param_count()],
        }
    }

    /// Uniform in `±1/sqrt(H)`.
    pub fn init<R: Rng>(spec: &LstmSpec, rng: &mut R) -> Self {
        let bound = 1.0 / (spec.hidden as f64).sqrt();
        Self {
            values: (0..spec.param_count()).map(|_| rng.random_range(-bound..bound)).collect(),
        }
    }

    pub fn head_bias(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    /// Per step `[x_t ; h_{t-1}]`.
    xh: Vec<f64>,
    /// Per step activated gates i, f, g, o.
    gates: Vec<f64>,
    /// `c_0 .. c_T`.
    c: Vec<f64>,
    /// `h_0 .. h_T`.
    h: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Reusable buffers for forward and backward passes of one spec.
#[derive(Clone, Debug)]
pub struct Workspace {
    spec: LstmSpec,
    layers: Vec<LayerCache>,
    dh_ext: Vec<f64>,
    dh_lower: Vec<f64>,
    dz: Vec<f64>,
    dxh: Vec<f64>,
    dh_next: Vec<f64>,
    dc_next: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Workspace {
    pub fn new(spec: &LstmSpec) -> Self {
        let (t, h) = (spec.lookback, spec.hidden);
        let layers = (0..spec.layers)
            .map(|l| {
                let width = spec.layer_input(l) + h;
                LayerCache {
                    xh: vec![0.0; t * width],
                    gates: vec![0.0; t * 4 * h],
                    c: vec![0.0; (t + 1) * h],
                    h: vec![0.0; (t + 1) * h],
                    tanh_c: vec![0.0; t * h],
                }
            })
            .collect();
        let max_width = spec.input_width.max(h) + h;
        Self {
            spec: *spec,
            layers,
            dh_ext: vec![0.0; t * h],
            dh_lower: vec![0.0; t * h],
            dz: vec![0.0; 4 * h],
            dxh: vec![0.0; max_width],
            dh_next: vec![0.0; h],
            dc_next: vec![0.0; h],
        }
    }

    /// Runs the network on a row-major `lookback x input_width` window.
    pub fn forward(&mut self, params: &LstmParams, window: &[f64]) -> Result<f64> {
        let spec = self.spec;
        if window.len() != spec.window_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} window", spec.lookback, spec.input_width),
                actual: format!("{} values", window.len()),
            });
        }
        if params.values.len() != spec.param_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", spec.param_count()),
                actual: params.values.len().to_string(),
            });
        }
        Ok(self.forward_unchecked(&params.values, window))
    }

    pub(crate) fn forward_unchecked(&mut self, p: &[f64], window: &[f64]) -> f64 {
        let spec = self.spec;
        let (steps, h) = (spec.lookback, spec.hidden);
        for l in 0..spec.layers {
            let din = spec.layer_input(l);
            let width = din + h;
            let off = spec.layer_offset(l);
            let (w, b) = p[off..off + spec.layer_len(l)].split_at(4 * h * width);
            let (below, rest) = self.layers.split_at_mut(l);
            let cache = &mut rest[0];
            for t in 0..steps {
                let xh = &mut cache.xh[t * width..(t + 1) * width];
                if l == 0 {
                    xh[..din].copy_from_slice(&window[t * din..(t + 1) * din]);
                } else {
                    xh[..din].copy_from_slice(&below[l - 1].h[(t + 1) * h..(t + 2) * h]);
                }
                xh[din..].copy_from_slice(&cache.h[t * h..(t + 1) * h]);
                let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
                for (r, g) in gates.iter_mut().enumerate() {
                    let row = &w[r * width..(r + 1) * width];
                    let mut z = b[r];
                    for (a, x) in row.iter().zip(xh.iter()) {
                        z += a * x;
                    }
                    *g = if (2 * h..3 * h).contains(&r) { z.tanh() } else { sigmoid(z) };
                }
                for k in 0..h {
                    let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                    let c = f * cache.c[t * h + k] + i * g;
                    let tc = c.tanh();
                    cache.c[(t + 1) * h + k] = c;
                    cache.tanh_c[t * h + k] = tc;
                    cache.h[(t + 1) * h + k] = o * tc;
                }
            }
        }
        let head = spec.head_offset();
        let top = &self.layers[spec.layers - 1].h[steps * h..(steps + 1) * h];
        p[head + h] + top.iter().zip(&p[head..head + h]).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Accumulates `d_out * d(output)/d(params)` into `grad` for the most
    /// recent forward pass.
    pub(crate) fn backward(&mut self, p: &[f64], d_out: f64, grad: &mut [f64]) {
        let spec = self.spec;
        let (steps, h) = (spec.lookback, spec.hidden);
        let head = spec.head_offset();
        {
            let top = &self.layers[spec.layers - 1].h[steps * h..(steps + 1) * h];
            for k in 0..h {
                grad[head + k] += d_out * top[k];
            }
            grad[head + h] += d_out;
        }
        self.dh_ext.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..h {
            self.dh_ext[(steps - 1) * h + k] = d_out * p[head + k];
        }

        for l in (0..spec.layers).rev() {
            let din = spec.layer_input(l);
            let width = din + h;
            let off = spec.layer_offset(l);
            let w = &p[off..off + 4 * h * width];
            let (gw, gb) = grad[off..off + spec.layer_len(l)].split_at_mut(4 * h * width);
            let cache = &self.layers[l];
            self.dh_next.iter_mut().for_each(|v| *v = 0.0);
            self.dc_next.iter_mut().for_each(|v| *v = 0.0);
            if l > 0 {
                self.dh_lower.iter_mut().for_each(|v| *v = 0.0);
            }
            for t in (0..steps).rev() {
                let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
                for k in 0..h {
                    let dh = self.dh_ext[t * h + k] + self.dh_next[k];
                    let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                    let tc = cache.tanh_c[t * h + k];
                    let d_o = dh * tc;
                    let dc = dh * o * (1.0 - tc * tc) + self.dc_next[k];
                    self.dz[k] = dc * g * i * (1.0 - i);
                    self.dz[h + k] = dc * cache.c[t * h + k] * f * (1.0 - f);
                    self.dz[2 * h + k] = dc * i * (1.0 - g * g);
                    self.dz[3 * h + k] = d_o * o * (1.0 - o);
                    self.dc_next[k] = dc * f;
                }
                let xh = &cache.xh[t * width..(t + 1) * width];
                let dxh = &mut self.dxh[..width];
                dxh.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..4 * h {
                    let dz = self.dz[r];
                    gb[r] += dz;
                    let row = &w[r * width..(r + 1) * width];
                    let grow = &mut gw[r * width..(r + 1) * width];
                    for j in 0..width {
                        grow[j] += dz * xh[j];
                        dxh[j] += dz * row[j];
                    }
                }
                self.dh_next.copy_from_slice(&dxh[din..]);
                if l > 0 {
                    self.dh_lower[t * h..(t + 1) * h].copy_from_slice(&dxh[..din]);
                }
            }
            if l > 0 {
                std::mem::swap(&mut self.dh_ext, &mut self.dh_lower);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_head_bias() {
        let spec = LstmSpec::new(3, 4, 2, 5).unwrap();
        let mut p = LstmParams::zeros(&spec);
        *p.values.last_mut().unwrap() = 0.75;
        let mut ws = Workspace::new(&spec);
        let window: Vec<f64> = (0..15).map(|i| i as f64).collect();
        assert_eq!(ws.forward(&p, &window).unwrap(), 0.75);
    }

    #[test]
    fn zero_window_matches_scaled_window() {
        let spec = LstmSpec::new(2, 3, 1, 4).unwrap();
        let p = LstmParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(1));
        let mut ws = Workspace::new(&spec);
        let window = vec![0.3; 8];
        let zeroed: Vec<f64> = window.iter().map(|v| v * 0.0).collect();
        let a = ws.forward(&p, &zeroed).unwrap();
        let b = ws.forward(&p, &vec![0.0; 8]).unwrap();
        assert_eq!(a, b);
        assert!(ws.forward(&p, &window).unwrap().is_finite());
    }

    #[test]
    fn shape_checks() {
        let spec = LstmSpec::new(2, 3, 1, 4).unwrap();
        let p = LstmParams::zeros(&spec);
        let mut ws = Workspace::new(&spec);
        assert!(matches!(ws.forward(&p, &[0.0; 7]), Err(Error::ShapeMismatch { .. })));
        assert!(LstmSpec::new(0, 3, 1, 4).is_err());
        // 4H(in+H) + 4H + H + 1
        assert_eq!(spec.param_count(), 4 * 3 * 5 + 12 + 3 + 1);
    }

    /// Parameters `0.3 sin(k + 1)` and window `cos(0.7 i)`; expected output
    /// computed by the numpy implementation in `tests/oracles/lstm_golden.py`.
    #[test]
    fn golden_forward() {
        let spec = LstmSpec::new(2, 3, 2, 4).unwrap();
        let p = LstmParams {
            values: (0..spec.param_count()).map(|k| 0.3 * ((k + 1) as f64).sin()).collect(),
        };
        let window: Vec<f64> = (0..8).map(|i| (0.7 * i as f64).cos()).collect();
        let y = Workspace::new(&spec).forward(&p, &window).unwrap();
        assert!((y - GOLDEN).abs() < 1e-12, "{y:.17}");
    }

    // tests/oracles/lstm_golden.py
    const GOLDEN: f64 = 0.106_419_749_865_420_22;
}
