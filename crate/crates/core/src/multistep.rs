//! Recursive multi-step forecasting.
//!
//! Step `k` of a forecast made at origin `o` (the first unobserved index)
//! predicts index `o + k - 1`. Its input window may reach into the future; DL
//! volume there is taken from earlier steps, calendar columns are computed from
//! the timestamp, and the remaining columns follow the plan's fill policy.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CellId, TimeGrid};
use crate::error::{Error, Result};
use crate::features::{ColumnSource, FeatureRecipe, InputMatrix};
use crate::handover::Direction;
use crate::nn::ForecastModel;

pub const DEFAULT_HORIZONS: [usize; 5] = [1, 2, 4, 8, 24];
const SEASON: usize = 24;

/// How a column is supplied at future positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExogenousPolicy {
    /// Computed from the timestamp.
    Calendar,
    /// Last observed value at the same hour of day.
    SeasonalNaive,
    /// Each neighbor's DL volume forecast by its own univariate model.
    NeighborRecursive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub horizons: Vec<usize>,
    pub ran: ExogenousPolicy,
    pub peak: ExogenousPolicy,
    pub handover: ExogenousPolicy,
}

impl Default for HorizonPlan {
    fn default() -> Self {
        Self {
            horizons: DEFAULT_HORIZONS.to_vec(),
            ran: ExogenousPolicy::SeasonalNaive,
            peak: ExogenousPolicy::Calendar,
            handover: ExogenousPolicy::SeasonalNaive,
        }
    }
}

impl HorizonPlan {
    pub fn new(horizons: Vec<usize>) -> Result<Self> {
        let plan = Self {
            horizons,
            ..Self::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config(format!(
                "horizons must be nonempty and at least 1, got {:?}",
                self.horizons
            )));
        }
        let bad = |what: &str, p: ExogenousPolicy| Error::Config(format!("policy {p:?} is not available for {what} columns"));
        if self.ran != ExogenousPolicy::SeasonalNaive {
            return Err(bad("RAN", self.ran));
        }
        if self.peak != ExogenousPolicy::Calendar {
            return Err(bad("peak", self.peak));
        }
        if self.handover == ExogenousPolicy::Calendar {
            return Err(bad("handover", self.handover));
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(1)
    }
}

/// Neighbor models and observed DL volume, needed by the neighbor-recursive policy.
#[derive(Clone, Copy, Debug)]
pub struct NeighborContext<'a> {
    pub models: &'a BTreeMap<CellId, ForecastModel>,
    pub series: &'a BTreeMap<CellId, Vec<f64>>,
}

/// Raw-unit one-step forecast from a raw, row-major window.
pub fn predict_one(model: &ForecastModel, raw_window: &[f64]) -> Result<f64> {
    model.predict_raw(&mut model.workspace(), raw_window)
}

/// Index of the latest observation before `origin` at the same hour as `p`.
fn seasonal_index(p: usize, origin: usize) -> Result<usize> {
    if p < origin {
        return Ok(p);
    }
    let back = (p - origin) / SEASON + 1;
    p.checked_sub(back * SEASON).ok_or_else(|| Error::TooShortSeries {
        required: SEASON,
        actual: origin,
    })
}

/// Core recursion: `step` maps a raw window to the next raw DL volume, and
/// `future` supplies non-target columns at positions at or after `origin`.
fn recurse(
    columns: &[&[f64]],
    lookback: usize,
    origin: usize,
    steps: usize,
    mut step: impl FnMut(&[f64]) -> Result<f64>,
    future: impl Fn(usize, usize) -> Result<f64>,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if origin < lookback {
        return Err(Error::TooShortSeries {
            required: lookback,
            actual: origin,
        });
    }
    if columns.iter().any(|c| c.len() < origin) {
        return Err(Error::LengthMismatch(columns.iter().map(|c| c.len()).min().unwrap_or(0), origin));
    }
    let width = columns.len();
    let start = origin - lookback;
    let rows = lookback + steps - 1;
    let mut buf = vec![0.0; rows * width];
    for r in 0..rows {
        let p = start + r;
        for (j, col) in columns.iter().enumerate() {
            buf[r * width + j] = if p < origin {
                col[p]
            } else if j == 0 {
                f64::NAN
            } else {
                future(j, p)?
            };
        }
    }
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let window = &buf[k * width..(k + lookback) * width];
        let y = step(window)?;
        if !y.is_finite() {
            return Err(Error::Divergence { epoch: 0, loss: y });
        }
        out.push(y);
        if k + 1 < steps {
            buf[(lookback + k) * width] = y;
        }
    }
    Ok(out)
}

/// Forecasts `steps` values from `origin`, reading `matrix` only before `origin`.
pub fn predict_multistep(
    model: &ForecastModel,
    matrix: &InputMatrix,
    origin: usize,
    steps: usize,
    plan: &HorizonPlan,
    neighbors: Option<NeighborContext<'_>>,
) -> Result<Vec<f64>> {
    plan.validate()?;
    let recipe = &model.recipe;
    let sources = recipe.columns();
    if sources.len() != matrix.width() || matrix.columns.iter().zip(&sources).any(|(c, s)| c.source != *s) {
        return Err(Error::ShapeMismatch {
            expected: format!("columns {:?}", sources.iter().map(|s| s.name()).collect::<Vec<_>>()),
            actual: format!("{:?}", matrix.columns.iter().map(|c| c.source.name()).collect::<Vec<_>>()),
        });
    }
    let neighbor_paths = match (plan.handover, &recipe.handover) {
        (ExogenousPolicy::NeighborRecursive, Some(_)) if steps > 1 => Some(neighbor_forecasts(
            recipe,
            neighbors,
            origin,
            steps - 1,
        )?),
        _ => None,
    };
    let columns = matrix.column_slices();
    let mut ws = model.workspace();
    recurse(
        &columns,
        recipe.lookback,
        origin,
        steps,
        |w| model.predict_raw(&mut ws, w),
        |j, p| future_value(recipe, &matrix.grid, &columns, sources[j], origin, p, neighbor_paths.as_ref()),
    )
}

fn future_value(
    recipe: &FeatureRecipe,
    grid: &TimeGrid,
    columns: &[&[f64]],
    source: ColumnSource,
    origin: usize,
    p: usize,
    neighbor_paths: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<f64> {
    let j = recipe.columns().iter().position(|s| *s == source).expect("source in recipe");
    match source {
        ColumnSource::PeakDays | ColumnSource::PeakHours => {
            Ok(recipe.calendar_value(source, grid, p).expect("peak profile present"))
        }
        ColumnSource::HandoverIn | ColumnSource::HandoverOut if neighbor_paths.is_some() => {
            let (inc, out) = neighbor_paths.unwrap();
            Ok(if source == ColumnSource::HandoverIn { inc } else { out }[p - origin])
        }
        _ => Ok(columns[j][seasonal_index(p, origin)?]),
    }
}

/// Mixed incoming and outgoing neighbor forecasts for positions `origin..origin + steps`.
fn neighbor_forecasts(
    recipe: &FeatureRecipe,
    ctx: Option<NeighborContext<'_>>,
    origin: usize,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let weights = recipe.handover.as_ref().expect("handover recipe");
    let ctx = ctx.ok_or_else(|| Error::MissingNeighborModel("no neighbor context".into()))?;
    let mut paths = BTreeMap::new();
    for cell in weights.neighbors() {
        let model = ctx
            .models
            .get(&cell)
            .ok_or_else(|| Error::MissingNeighborModel(cell.to_string()))?;
        if model.spec.input_width != 1 {
            return Err(Error::Config(format!("neighbor model for {cell} must be univariate")));
        }
        let series = ctx
            .series
            .get(&cell)
            .ok_or_else(|| Error::MissingNeighborSeries(cell.to_string()))?;
        let mut ws = model.workspace();
        let path = recurse(
            &[&series[..origin.min(series.len())]],
            model.recipe.lookback,
            origin,
            steps,
            |w| model.predict_raw(&mut ws, w),
            |_, _| unreachable!("univariate"),
        )?;
        paths.insert(cell, path);
    }
    let mix = |d: Direction| -> Vec<f64> { (0..steps).map(|k| weights.mix(d, |c| paths[&c][k])).collect() };
    Ok((mix(Direction::In), mix(Direction::Out)))
}

/// Raw predictions and actuals at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSeries {
    pub horizon: usize,
    pub target_indices: Vec<usize>,
    pub pred: Vec<f64>,
    pub actual: Vec<f64>,
}

/// Forecasts from every origin in `range` and scores each horizon on targets
/// inside `range`: horizon `h` from origin `o` predicts index `o + h - 1`.
pub fn rolling_origin(
    model: &ForecastModel,
    matrix: &InputMatrix,
    range: Range<usize>,
    plan: &HorizonPlan,
    neighbors: Option<NeighborContext<'_>>,
) -> Result<Vec<HorizonSeries>> {
    plan.validate()?;
    if range.end > matrix.len() || range.is_empty() {
        return Err(Error::Config(format!("evaluation range {range:?} outside data of length {}", matrix.len())));
    }
    let hmax = plan.max_horizon();
    let origins: Vec<usize> = range.clone().collect();
    let paths: Vec<Vec<f64>> = origins
        .par_iter()
        .map(|&o| {
            let steps = hmax.min(range.end - o);
            predict_multistep(model, matrix, o, steps, plan, neighbors)
        })
        .collect::<Result<_>>()?;
    let actual = &matrix.columns[0].values;
    Ok(plan
        .horizons
        .iter()
        .map(|&h| {
            let mut s = HorizonSeries {
                horizon: h,
                target_indices: Vec::new(),
                pred: Vec::new(),
                actual: Vec::new(),
            };
            for (o, path) in origins.iter().zip(&paths) {
                if let Some(y) = path.get(h - 1) {
                    s.target_indices.push(o + h - 1);
                    s.pred.push(*y);
                    s.actual.push(actual[o + h - 1]);
                }
            }
            s
        })
        .collect())
}
