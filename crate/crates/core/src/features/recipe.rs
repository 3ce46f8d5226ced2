use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::Weekday;
use serde::{Deserialize, Serialize};

use super::{detect_peak_hours, handover_features, handover_weights, select_ran_features};
use super::{HandoverWeights, PeakProfile, DEFAULT_CORRELATION_THRESHOLD, DEFAULT_PEAK_THRESHOLD};
use crate::data::{CellDataset, CellId, FeatureLabel, Stats, TimeGrid};
use crate::error::{Error, Result};
use crate::handover::{Direction, HandoverMatrix};

/// The five model input recipes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Univariate,
    Ran,
    Peak,
    Handover,
    All,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Univariate,
        Variant::Ran,
        Variant::Peak,
        Variant::Handover,
        Variant::All,
    ];

    /// Display name used in reports.
    pub fn model_name(self) -> &'static str {
        match self {
            Variant::Univariate => "univariate LSTM",
            Variant::Ran => "mvLSTM-RAN",
            Variant::Peak => "mvLSTM-peak",
            Variant::Handover => "mvLSTM-handover",
            Variant::All => "mvLSTM-all",
        }
    }

    pub fn uses_ran(self) -> bool {
        matches!(self, Variant::Ran | Variant::All)
    }

    pub fn uses_peak(self) -> bool {
        matches!(self, Variant::Peak | Variant::All)
    }

    pub fn uses_handover(self) -> bool {
        matches!(self, Variant::Handover | Variant::All)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Univariate => "univariate",
            Variant::Ran => "ran",
            Variant::Peak => "peak",
            Variant::Handover => "handover",
            Variant::All => "all",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnSource {
    Counter(FeatureLabel),
    PeakDays,
    PeakHours,
    HandoverIn,
    HandoverOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    /// z-normalized before entering the model.
    Scaled,
    /// {0, 1} indicator passed through unchanged.
    Boolean,
}

impl ColumnSource {
    pub fn kind(self) -> ColumnKind {
        match self {
            ColumnSource::PeakDays | ColumnSource::PeakHours => ColumnKind::Boolean,
            _ => ColumnKind::Scaled,
        }
    }

    pub fn name(self) -> String {
        match self {
            ColumnSource::Counter(l) => l.to_string(),
            ColumnSource::PeakDays => "peak_days".into(),
            ColumnSource::PeakHours => "peak_hours".into(),
            ColumnSource::HandoverIn => "handover_in".into(),
            ColumnSource::HandoverOut => "handover_out".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub correlation_threshold: f64,
    pub peak_threshold: f64,
    pub weekend: Vec<Weekday>,
    pub lookback: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            peak_threshold: DEFAULT_PEAK_THRESHOLD,
            weekend: vec![Weekday::Sat, Weekday::Sun],
            lookback: 24,
        }
    }
}

/// What a model sees: DL volume first, then the variant's extra columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    pub variant: Variant,
    pub lookback: usize,
    pub ran_labels: Vec<FeatureLabel>,
    pub peak: Option<PeakProfile>,
    pub handover: Option<HandoverWeights>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub source: ColumnSource,
    pub values: Vec<f64>,
}

/// Raw (unnormalized) model inputs over a dataset's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMatrix {
    pub grid: TimeGrid,
    pub columns: Vec<Column>,
}

impl InputMatrix {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn column_slices(&self) -> Vec<&[f64]> {
        self.columns.iter().map(|c| c.values.as_slice()).collect()
    }

    /// Per-column scaling fitted on `train`; Boolean columns get the identity.
    pub fn fit_scalers(&self, train: Range<usize>) -> Result<Vec<Stats>> {
        self.columns
            .iter()
            .map(|c| match c.source.kind() {
                ColumnKind::Boolean => Ok(Stats::identity()),
                ColumnKind::Scaled => Stats::fit(&c.source.name(), &c.values[train.clone()]),
            })
            .collect()
    }

    pub fn scaled(&self, scalers: &[Stats]) -> Result<InputMatrix> {
        if scalers.len() != self.width() {
            return Err(Error::LengthMismatch(scalers.len(), self.width()));
        }
        let columns = self
            .columns
            .iter()
            .zip(scalers)
            .map(|(c, s)| Column {
                source: c.source,
                values: c.values.iter().map(|v| s.apply(*v)).collect(),
            })
            .collect();
        Ok(InputMatrix {
            grid: self.grid,
            columns,
        })
    }
}

impl FeatureRecipe {
    pub fn univariate(lookback: usize) -> Self {
        Self {
            variant: Variant::Univariate,
            lookback,
            ran_labels: Vec::new(),
            peak: None,
            handover: None,
        }
    }

    pub fn columns(&self) -> Vec<ColumnSource> {
        let mut cols = vec![ColumnSource::Counter(FeatureLabel::DL_VOLUME)];
        cols.extend(self.ran_labels.iter().map(|l| ColumnSource::Counter(*l)));
        if self.peak.is_some() {
            cols.extend([ColumnSource::PeakDays, ColumnSource::PeakHours]);
        }
        if self.handover.is_some() {
            cols.extend([ColumnSource::HandoverIn, ColumnSource::HandoverOut]);
        }
        cols
    }

    pub fn width(&self) -> usize {
        self.columns().len()
    }

    /// Value of a calendar column at any grid index, including future ones.
    pub fn calendar_value(&self, source: ColumnSource, grid: &TimeGrid, index: usize) -> Option<f64> {
        let peak = self.peak.as_ref()?;
        let flag = match source {
            ColumnSource::PeakDays => !peak.is_weekend(grid.weekday(index)),
            ColumnSource::PeakHours => peak.is_peak_hour(grid.hour_of_day(index)),
            _ => return None,
        };
        Some(if flag { 1.0 } else { 0.0 })
    }

    /// Evaluates every column over the target's grid.
    pub fn materialize(&self, target: &CellDataset, neighbors: &BTreeMap<CellId, Vec<f64>>) -> Result<InputMatrix> {
        let grid = *target.grid();
        let handover = match &self.handover {
            Some(w) => {
                for c in w.neighbors() {
                    match neighbors.get(&c) {
                        None => return Err(Error::MissingNeighborSeries(c.to_string())),
                        Some(s) if s.len() != grid.len() => return Err(Error::LengthMismatch(s.len(), grid.len())),
                        _ => {}
                    }
                }
                let mix = |d: Direction| -> Vec<f64> {
                    (0..grid.len()).map(|t| w.mix(d, |c| neighbors[&c][t])).collect()
                };
                Some((mix(Direction::In), mix(Direction::Out)))
            }
            None => None,
        };
        let columns = self
            .columns()
            .into_iter()
            .map(|source| {
                let values = match source {
                    ColumnSource::Counter(l) => target.get(l)?.to_vec(),
                    ColumnSource::PeakDays | ColumnSource::PeakHours => (0..grid.len())
                        .map(|t| self.calendar_value(source, &grid, t).unwrap_or(0.0))
                        .collect(),
                    ColumnSource::HandoverIn => handover.as_ref().map(|h| h.0.clone()).unwrap_or_default(),
                    ColumnSource::HandoverOut => handover.as_ref().map(|h| h.1.clone()).unwrap_or_default(),
                };
                Ok(Column { source, values })
            })
            .collect::<Result<_>>()?;
        Ok(InputMatrix { grid, columns })
    }
}

/// Builds a variant's recipe from the training range of `ds` and evaluates it
/// over the whole grid. Selection and peak detection only see `train`.
pub fn build_recipe(
    variant: Variant,
    ds: &CellDataset,
    train: Range<usize>,
    neighbors: &BTreeMap<CellId, Vec<f64>>,
    ho: &HandoverMatrix,
    settings: &FeatureSettings,
) -> Result<(FeatureRecipe, InputMatrix)> {
    let train_ds = ds.slice(train)?;
    let ran_labels = if variant.uses_ran() {
        select_ran_features(&train_ds, settings.correlation_threshold)?
    } else {
        Vec::new()
    };
    let peak = if variant.uses_peak() {
        Some(detect_peak_hours(
            train_ds.dl_volume(),
            train_ds.grid(),
            settings.peak_threshold,
            &settings.weekend,
        )?)
    } else {
        None
    };
    let handover = if variant.uses_handover() {
        // Validates that every listed neighbor has a series.
        handover_features(ds.cell(), neighbors, ho)?;
        Some(handover_weights(ds.cell(), ho)?)
    } else {
        None
    };
    let recipe = FeatureRecipe {
        variant,
        lookback: settings.lookback,
        ran_labels,
        peak,
        handover,
    };
    let matrix = recipe.materialize(ds, neighbors)?;
    Ok((recipe, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handover::table2_handover_matrix;
    use crate::synth::{generate_region, ScenarioConfig};

    fn region() -> (BTreeMap<CellId, CellDataset>, BTreeMap<CellId, Vec<f64>>) {
        let cfg = ScenarioConfig {
            weeks: 6,
            ..ScenarioConfig::default()
        };
        let region = generate_region(&cfg, &table2_handover_matrix()).unwrap();
        let f10 = region.iter().map(|(c, d)| (*c, d.dl_volume().to_vec())).collect();
        (region, f10)
    }

    #[test]
    fn widths_per_variant() {
        let (region, f10) = region();
        let gu14 = &region[&"GU14".parse().unwrap()];
        let ho = table2_handover_matrix();
        let s = FeatureSettings::default();
        let width = |v| build_recipe(v, gu14, 0..672, &f10, &ho, &s).unwrap().1.width();
        assert_eq!(width(Variant::Univariate), 1);
        assert_eq!(width(Variant::Ran), 5);
        assert_eq!(width(Variant::Peak), 3);
        assert_eq!(width(Variant::Handover), 3);
        assert_eq!(width(Variant::All), 9);
    }

    #[test]
    fn booleans_bypass_scaling() {
        let (region, f10) = region();
        let gu14 = &region[&"GU14".parse().unwrap()];
        let (recipe, m) = build_recipe(Variant::All, gu14, 0..672, &f10, &table2_handover_matrix(), &FeatureSettings::default()).unwrap();
        let scalers = m.fit_scalers(0..672).unwrap();
        for (src, s) in recipe.columns().iter().zip(&scalers) {
            if src.kind() == ColumnKind::Boolean {
                assert_eq!(*s, Stats::identity());
            }
        }
        assert_eq!(recipe.columns()[0], ColumnSource::Counter(FeatureLabel::DL_VOLUME));
    }

    #[test]
    fn handover_variant_needs_neighbors() {
        let (region, _) = region();
        let gu14 = &region[&"GU14".parse().unwrap()];
        let err = build_recipe(Variant::Handover, gu14, 0..672, &BTreeMap::new(), &table2_handover_matrix(), &FeatureSettings::default());
        assert!(matches!(err, Err(Error::MissingNeighborSeries(_))));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
    }
}
