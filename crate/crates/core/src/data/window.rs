use std::ops::Range;

use super::{CellDataset, FeatureLabel};
use crate::error::{Error, Result};

/// One supervised example: `lookback` consecutive rows of `width` inputs and
/// the DL volume of the following hour.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Row-major `lookback × width`, oldest row first.
    pub window: Vec<f64>,
    pub target: f64,
    /// Grid index of the target hour.
    pub target_index: usize,
}

/// Slides a `lookback`-hour window over the dataset, targeting F10 one hour ahead.
pub fn windowize(ds: &CellDataset, features: &[FeatureLabel], lookback: usize) -> Result<Vec<Sample>> {
    let columns = features
        .iter()
        .map(|l| ds.get(*l))
        .collect::<Result<Vec<_>>>()?;
    windows_for_targets(&columns, ds.dl_volume(), lookback..ds.len(), lookback)
}

/// Samples for every target index in `targets`; windows may reach back before
/// `targets.start` so long as they stay inside the columns.
pub fn windows_for_targets(
    columns: &[&[f64]],
    target: &[f64],
    targets: Range<usize>,
    lookback: usize,
) -> Result<Vec<Sample>> {
    if lookback == 0 {
        return Err(Error::Config("lookback must be at least 1".into()));
    }
    for c in columns {
        if c.len() != target.len() {
            return Err(Error::LengthMismatch(c.len(), target.len()));
        }
    }
    let start = targets.start.max(lookback);
    let end = targets.end.min(target.len());
    let width = columns.len();
    Ok((start..end)
        .map(|t| {
            let mut window = Vec::with_capacity(lookback * width);
            for row in t - lookback..t {
                window.extend(columns.iter().map(|c| c[row]));
            }
            Sample {
                window,
                target: target[t],
                target_index: t,
            }
        })
        .collect())
}
