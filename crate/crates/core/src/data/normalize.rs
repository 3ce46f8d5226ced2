use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CellDataset, FeatureLabel};
use crate::error::{Error, Result};

/// Standard deviations below this are treated as constant features.
pub const MIN_STD: f64 = 1e-12;

/// Mean and population standard deviation of one feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
}

impl Stats {
    /// Population statistics; fails for constant or empty input.
    pub fn fit(label: &str, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < MIN_STD {
            return Err(Error::ConstantFeature {
                label: label.to_string(),
                std,
            });
        }
        Ok(Self { mean, std })
    }

    /// Identity transform, used for Boolean inputs.
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Per-feature z-score transform fitted on a training slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    stats: BTreeMap<FeatureLabel, Stats>,
}

impl Normalizer {
    pub fn fit(train: &CellDataset) -> Result<Self> {
        let stats = train
            .series()
            .iter()
            .map(|(label, values)| Ok((*label, Stats::fit(&label.to_string(), values)?)))
            .collect::<Result<_>>()?;
        Ok(Self { stats })
    }

    pub fn stats(&self, label: FeatureLabel) -> Result<Stats> {
        self.stats
            .get(&label)
            .copied()
            .ok_or_else(|| Error::UnknownFeature(label.to_string()))
    }

    pub fn apply(&self, ds: &CellDataset) -> Result<CellDataset> {
        self.map(ds, |s, v| s.apply(v))
    }

    pub fn invert(&self, ds: &CellDataset) -> Result<CellDataset> {
        self.map(ds, |s, v| s.invert(v))
    }

    fn map(&self, ds: &CellDataset, f: impl Fn(&Stats, f64) -> f64) -> Result<CellDataset> {
        let series = ds
            .series()
            .iter()
            .map(|(label, values)| {
                let s = self.stats(*label)?;
                Ok((*label, values.iter().map(|v| f(&s, *v)).collect()))
            })
            .collect::<Result<_>>()?;
        CellDataset::new(ds.cell(), *ds.grid(), series)
    }
}

/// Convenience alias for fitting on a training slice.
pub fn fit_normalizer(train: &CellDataset) -> Result<Normalizer> {
    Normalizer::fit(train)
}
