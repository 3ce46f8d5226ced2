//! Deterministic multi-cell traffic scenarios.
//!
//! Each cell's DL volume is a daily profile shaped by a weekday/weekend factor,
//! slow trend, AR(1) multiplicative noise and busy-hour spikes. Cells listed as
//! handover targets additionally absorb a share of their incoming neighbors'
//! previous-hour volume. The other nineteen counters are derived from DL volume
//! with controlled correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{CellDataset, CellId, FeatureLabel, FeatureSeries, TimeGrid, HOURS_PER_WEEK};
use crate::error::{Error, Result};
use crate::handover::{table2_handover_matrix, HandoverMatrix};

/// Per-cell shape of the daily demand curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellProfile {
    pub cell: CellId,
    /// Mean hourly DL volume.
    pub level: f64,
    /// Peak-to-trough depth of the daily curve in (0, 1].
    pub amplitude: f64,
    /// Hour of day at which the daily curve peaks.
    pub peak_hour: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub start: NaiveDateTime,
    pub weeks: usize,
    pub seed: u64,
    pub cells: Vec<CellProfile>,
    pub weekday_weekend_ratio: f64,
    /// Relative level change per week.
    pub trend_per_week: f64,
    pub spike_probability: f64,
    /// Mean relative size of a busy-hour spike.
    pub spike_magnitude: f64,
    /// Pearson target for F16..F19 against F10.
    pub target_correlation: f64,
    /// Largest absolute correlation of the remaining counters with F10.
    pub nuisance_correlation: f64,
    /// Stationary std of the multiplicative AR(1) noise.
    pub noise_scale: f64,
    pub ar_coefficient: f64,
    /// Share of a handover target's volume drawn from its in-neighbors one hour earlier.
    pub coupling: f64,
    pub volume_unit: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let cells = table2_handover_matrix()
            .cells()
            .into_iter()
            .enumerate()
            .map(|(i, cell)| CellProfile {
                cell,
                level: if cell.to_string() == "GU14" { 60.0 } else { 25.0 + 3.0 * (i % 7) as f64 },
                amplitude: 0.75 + 0.02 * (i % 5) as f64,
                peak_hour: 19 + (i % 3) as u32,
            })
            .collect();
        Self {
            start: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            weeks: 52,
            seed: 7,
            cells,
            weekday_weekend_ratio: 1.3,
            trend_per_week: 0.002,
            spike_probability: 0.1,
            spike_magnitude: 0.5,
            target_correlation: 0.95,
            nuisance_correlation: 0.5,
            noise_scale: 0.15,
            ar_coefficient: 0.85,
            coupling: 0.5,
            volume_unit: "GB".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.weeks < 2 {
            return bad(format!("weeks must be >= 2, got {}", self.weeks));
        }
        if !(self.target_correlation > 0.0 && self.target_correlation < 1.0) {
            return bad(format!("target_correlation must lie in (0, 1), got {}", self.target_correlation));
        }
        if !(0.0..1.0).contains(&self.nuisance_correlation) {
            return bad(format!("nuisance_correlation must lie in [0, 1), got {}", self.nuisance_correlation));
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return bad(format!("spike_probability must lie in [0, 1], got {}", self.spike_probability));
        }
        if !(0.0..1.0).contains(&self.coupling) {
            return bad(format!("coupling must lie in [0, 1), got {}", self.coupling));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient.abs()) || self.noise_scale < 0.0 || self.spike_magnitude < 0.0 {
            return bad("noise parameters out of range".into());
        }
        if self.weekday_weekend_ratio <= 0.0 {
            return bad("weekday_weekend_ratio must be positive".into());
        }
        if self.cells.is_empty() {
            return bad("scenario has no cells".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.cells {
            if !seen.insert(p.cell) {
                return bad(format!("cell {} listed twice", p.cell));
            }
            if p.level <= 0.0 || !(0.0..=1.0).contains(&p.amplitude) || p.amplitude == 0.0 || p.peak_hour > 23 {
                return bad(format!("invalid profile for {}", p.cell));
            }
        }
        Ok(())
    }

    pub fn hours(&self) -> usize {
        self.weeks * HOURS_PER_WEEK
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.start, self.hours())
    }
}

/// Named, independent random stream derived from the scenario seed.
fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a over the stream name selects the ChaCha stream.
    let id = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn daily_shape(hour: u32, p: &CellProfile) -> f64 {
    let phase = 2.0 * PI * (hour as f64 - p.peak_hour as f64) / 24.0;
    let bump = ((1.0 + phase.cos()) / 2.0).powi(3);
    (1.0 - p.amplitude) + p.amplitude * bump
}

fn is_weekend(d: Weekday) -> bool {
    matches!(d, Weekday::Sat | Weekday::Sun)
}

/// Uncoupled DL volume for one cell.
fn own_volume(cfg: &ScenarioConfig, grid: &TimeGrid, p: &CellProfile) -> Vec<f64> {
    let mut rng = stream(cfg.seed, &format!("{}/F10", p.cell));
    let r = cfg.weekday_weekend_ratio;
    let weekend = 7.0 / (5.0 * r + 2.0);
    let weekday = r * weekend;
    let innovation = cfg.noise_scale * (1.0 - cfg.ar_coefficient.powi(2)).sqrt();
    let mut ar = cfg.noise_scale * normal(&mut rng);
    (0..grid.len())
        .map(|t| {
            ar = cfg.ar_coefficient * ar + innovation * normal(&mut rng);
            let spike_draw: f64 = rng.random();
            let spike_size: f64 = rng.random_range(0.5..1.5);
            let ts = grid.timestamp(t);
            let week_factor = if is_weekend(ts.weekday()) { weekend } else { weekday };
            let trend = 1.0 + cfg.trend_per_week * t as f64 / HOURS_PER_WEEK as f64;
            let mut v = p.level * trend * week_factor * daily_shape(ts.hour(), p) * (1.0 + ar);
            if ts.hour() == p.peak_hour && spike_draw < cfg.spike_probability {
                v *= 1.0 + cfg.spike_magnitude * spike_size;
            }
            v.max(0.0)
        })
        .collect()
}

/// Counter recipe: correlation with F10, output offset and scale.
struct CounterShape {
    correlation: f64,
    offset: f64,
    scale: f64,
}

fn counter_shape(label: FeatureLabel, cfg: &ScenarioConfig) -> CounterShape {
    let rho = cfg.target_correlation;
    let cap = cfg.nuisance_correlation;
    let (c, offset, scale) = match label.index() {
        1 => (0.6 * cap, 900.0, 150.0),
        2 => (-0.3 * cap, 98.5, 0.4),
        3 => (0.2 * cap, 4.0, 1.0),
        4 => (cap, 1200.0, 200.0),
        5 => (0.8 * cap, 1100.0, 180.0),
        6 => (-0.7 * cap, 35.0, 6.0),
        7 => (0.4 * cap, 8.0, 1.5),
        8 => (-cap, 14.0, 3.0),
        9 => (0.1 * cap, 2.5, 0.5),
        11 => (0.9 * cap, 6.0, 1.2),
        12 => (-0.5 * cap, -118.0, 2.0),
        13 => (-0.2 * cap, -101.0, 3.0),
        14 => (-0.4 * cap, -104.0, 3.0),
        15 => (-0.6 * cap, 10.0, 1.2),
        16 => (rho, 45.0, 12.0),
        17 => (rho, 30.0, 8.0),
        18 => (rho, 120.0, 30.0),
        19 => (rho, 50.0, 12.0),
        20 => (0.3 * cap, 25.0, 5.0),
        _ => unreachable!("F10 is not derived"),
    };
    CounterShape {
        correlation: c,
        offset,
        scale,
    }
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let std = if std > 0.0 { std } else { 1.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
}

/// The nineteen non-target counters of one cell, derived from its DL volume.
///
/// Each counter is `c * z(F10) + sqrt(1 - c^2) * u` mapped to a plausible
/// range, where `u` is unit-variance and independent of F10: iid noise for the
/// correlated counters, off-period seasonality plus AR noise for the rest.
pub fn derive_counter_features(
    f10: &FeatureSeries,
    cfg: &ScenarioConfig,
    rng_stream: &str,
) -> Result<Vec<FeatureSeries>> {
    if f10.values.is_empty() {
        return Err(Error::Empty);
    }
    let mut z = f10.values.clone();
    standardize(&mut z);
    let n = z.len();
    let mut out = Vec::with_capacity(19);
    for label in FeatureLabel::all().filter(|l| *l != FeatureLabel::DL_VOLUME) {
        let shape = counter_shape(label, cfg);
        let mut rng = stream(cfg.seed, &format!("{rng_stream}/{label}"));
        let correlated = (16..=19).contains(&label.index());
        let mut u: Vec<f64> = if correlated {
            (0..n).map(|_| normal(&mut rng)).collect()
        } else {
            let period = 29.3 + 6.1 * label.index() as f64;
            let phase = rng.random_range(0.0..2.0 * PI);
            let mut ar = 0.0;
            (0..n)
                .map(|t| {
                    ar = 0.9 * ar + 0.3 * normal(&mut rng);
                    (2.0 * PI * t as f64 / period + phase).sin() + ar
                })
                .collect()
        };
        standardize(&mut u);
        let c = shape.correlation;
        let resid = (1.0 - c * c).max(0.0).sqrt();
        let values = z
            .iter()
            .zip(&u)
            .map(|(zi, ui)| shape.offset + shape.scale * (c * zi + resid * ui))
            .collect();
        out.push(FeatureSeries::new(label.to_string(), values));
    }
    Ok(out)
}

/// Generates every configured cell. Handover targets mix in their incoming
/// neighbors' previous-hour DL volume with weights proportional to the listed rates.
pub fn generate_region(cfg: &ScenarioConfig, ho: &HandoverMatrix) -> Result<BTreeMap<CellId, CellDataset>> {
    cfg.validate()?;
    ho.validate()?;
    let configured: BTreeSet<CellId> = cfg.cells.iter().map(|p| p.cell).collect();
    for c in ho.cells() {
        if !configured.contains(&c) {
            return Err(Error::InconsistentHandover(format!("cell {c} is not in the scenario")));
        }
    }
    let grid = cfg.grid()?;
    let ids: Vec<CellId> = cfg.cells.iter().map(|p| p.cell).collect();
    let index: BTreeMap<CellId, usize> = ids.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let own: Vec<Vec<f64>> = cfg.cells.iter().map(|p| own_volume(cfg, &grid, p)).collect();

    // Incoming mixing weights per target, renormalized over listed neighbors.
    let mixes: Vec<Option<Vec<(usize, f64)>>> = ids
        .iter()
        .map(|c| {
            let rates = ho.neighbors(*c)?;
            let total: f64 = rates.incoming.iter().map(|(_, r)| r).sum();
            (total > 0.0).then(|| rates.incoming.iter().map(|(n, r)| (index[n], r / total)).collect())
        })
        .collect();

    let mut f10 = own.clone();
    for t in 1..grid.len() {
        for (c, mix) in mixes.iter().enumerate() {
            if let Some(mix) = mix {
                let lagged: f64 = mix.iter().map(|(n, w)| w * f10[*n][t - 1]).sum();
                f10[c][t] = (1.0 - cfg.coupling) * own[c][t] + cfg.coupling * lagged;
            }
        }
    }

    let mut out = BTreeMap::new();
    for (c, volume) in ids.iter().zip(f10) {
        let target = FeatureSeries::new(FeatureLabel::DL_VOLUME.to_string(), volume);
        let mut series = BTreeMap::new();
        for s in derive_counter_features(&target, cfg, &c.to_string())? {
            series.insert(s.label.parse()?, s.values);
        }
        series.insert(FeatureLabel::DL_VOLUME, target.values);
        out.insert(*c, CellDataset::new(*c, grid, series)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::pearson;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            weeks: 8,
            ..ScenarioConfig::default()
        }
    }

    fn gu14() -> CellId {
        "GU14".parse().unwrap()
    }

    #[test]
    fn deterministic() {
        let ho = table2_handover_matrix();
        let a = generate_region(&small_cfg(), &ho).unwrap();
        let b = generate_region(&small_cfg(), &ho).unwrap();
        assert_eq!(a, b);
        let other = generate_region(&ScenarioConfig { seed: 8, ..small_cfg() }, &ho).unwrap();
        assert_ne!(a[&gu14()], other[&gu14()]);
    }

    #[test]
    fn adding_a_cell_keeps_other_streams() {
        let ho = HandoverMatrix::default();
        let cfg = small_cfg();
        let mut fewer = cfg.clone();
        fewer.cells.retain(|p| p.cell != "RE37".parse().unwrap());
        let a = generate_region(&cfg, &ho).unwrap();
        let b = generate_region(&fewer, &ho).unwrap();
        assert_eq!(a[&gu14()], b[&gu14()]);
    }

    #[test]
    fn weekday_weekend_ratio() {
        let ds = &generate_region(&ScenarioConfig::default(), &table2_handover_matrix()).unwrap()[&gu14()];
        let (mut wd, mut we) = (Vec::new(), Vec::new());
        for (t, v) in ds.dl_volume().iter().enumerate() {
            if is_weekend(ds.grid().weekday(t)) {
                we.push(*v)
            } else {
                wd.push(*v)
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ratio = mean(&wd) / mean(&we);
        assert!((1.2..=1.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn counter_correlations() {
        let cfg = ScenarioConfig::default();
        let ds = &generate_region(&cfg, &table2_handover_matrix()).unwrap()[&gu14()];
        let f = |i| ds.get(FeatureLabel::new(i).unwrap()).unwrap();
        assert!(pearson(f(10), f(16)).unwrap() >= 0.90);
        assert!(pearson(f(10), f(3)).unwrap().abs() <= 0.8);

        let tight = ScenarioConfig { target_correlation: 0.99, ..cfg.clone() };
        let fs = FeatureSeries::new("F10", ds.dl_volume().to_vec());
        let counters = derive_counter_features(&fs, &tight, "GU14").unwrap();
        let f18 = counters.iter().find(|s| s.label == "F18").unwrap();
        assert!(pearson(ds.dl_volume(), &f18.values).unwrap() >= 0.95);
        for s in &counters {
            let idx: u8 = s.label[1..].parse().unwrap();
            if !(16..=19).contains(&idx) {
                assert!(pearson(ds.dl_volume(), &s.values).unwrap().abs() < 0.8, "{}", s.label);
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = ScenarioConfig { target_correlation: 1.0, ..small_cfg() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = ScenarioConfig { weeks: 1, ..small_cfg() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { spike_probability: 1.5, ..small_cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn handover_cells_must_be_configured() {
        let mut cfg = small_cfg();
        cfg.cells.retain(|p| p.cell != "GU12".parse().unwrap());
        assert!(matches!(
            generate_region(&cfg, &table2_handover_matrix()),
            Err(Error::InconsistentHandover(_))
        ));
    }

    fn autocorr(x: &[f64], lag: usize) -> f64 {
        pearson(&x[..x.len() - lag], &x[lag..]).unwrap()
    }

    #[test]
    fn daily_seasonality() {
        let ds = &generate_region(&small_cfg(), &table2_handover_matrix()).unwrap()[&gu14()];
        assert!(autocorr(ds.dl_volume(), 24) > autocorr(ds.dl_volume(), 13));
    }

    /// Day-over-day change, which strips the shared daily profile.
    fn diff(x: &[f64]) -> Vec<f64> {
        x[24..].iter().zip(x).map(|(a, b)| a - b).collect()
    }

    /// Correlation of the target's day-over-day change with the previous hour's
    /// change in the incoming-neighbor mix.
    fn lagged_mix_corr(region: &BTreeMap<CellId, CellDataset>, shuffle: bool) -> f64 {
        let ho = table2_handover_matrix();
        let rates = &ho.neighbors(gu14()).unwrap().incoming;
        let total: f64 = rates.iter().map(|(_, r)| r).sum();
        let n = region[&gu14()].len();
        let mut mix = vec![0.0; n];
        for (k, (c, r)) in rates.iter().enumerate() {
            let s = region[c].dl_volume();
            for t in 0..n {
                // A shuffled neighbor is read with a large, cell-specific offset.
                let src = if shuffle { (t + 1000 + 97 * k) % n } else { t };
                mix[t] += r / total * s[src];
            }
        }
        let dt = diff(region[&gu14()].dl_volume());
        let dm = diff(&mix);
        pearson(&dt[1..], &dm[..dm.len() - 1]).unwrap()
    }

    #[test]
    fn neighbor_coupling_is_real() {
        let region = generate_region(&small_cfg(), &table2_handover_matrix()).unwrap();
        let coupled = lagged_mix_corr(&region, false);
        let shuffled = lagged_mix_corr(&region, true);
        let uncoupled = generate_region(&ScenarioConfig { coupling: 0.0, ..small_cfg() }, &table2_handover_matrix()).unwrap();
        let baseline = lagged_mix_corr(&uncoupled, false);
        assert!(coupled > shuffled + 0.2, "coupled {coupled} shuffled {shuffled}");
        assert!(coupled > baseline + 0.2, "coupled {coupled} baseline {baseline}");
    }
}
