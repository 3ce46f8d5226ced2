use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::CellDataset;
use crate::error::{Error, Result};

pub const HOURS_PER_WEEK: usize = 168;

/// Chronological train/validation/test lengths in weeks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_weeks: usize,
    pub val_weeks: usize,
    pub test_weeks: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_weeks: 40,
            val_weeks: 8,
            test_weeks: 4,
        }
    }
}

impl SplitSpec {
    pub fn new(train_weeks: usize, val_weeks: usize, test_weeks: usize) -> Self {
        Self {
            train_weeks,
            val_weeks,
            test_weeks,
        }
    }

    pub fn total_hours(&self) -> usize {
        (self.train_weeks + self.val_weeks + self.test_weeks) * HOURS_PER_WEEK
    }

    /// Index ranges of the three slices, validated against `len`.
    pub fn ranges(&self, len: usize) -> Result<[Range<usize>; 3]> {
        if self.train_weeks == 0 || self.val_weeks == 0 || self.test_weeks == 0 {
            return Err(Error::Config(format!("every split must be at least one week: {self:?}")));
        }
        let required = self.total_hours();
        if len < required {
            return Err(Error::DatasetTooShort {
                required,
                actual: len,
            });
        }
        let a = self.train_weeks * HOURS_PER_WEEK;
        let b = a + self.val_weeks * HOURS_PER_WEEK;
        Ok([0..a, a..b, b..required])
    }
}

#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: CellDataset,
    pub val: CellDataset,
    pub test: CellDataset,
}

pub fn split_dataset(ds: &CellDataset, spec: &SplitSpec) -> Result<DatasetSplit> {
    let [train, val, test] = spec.ranges(ds.len())?;
    Ok(DatasetSplit {
        train: ds.slice(train)?,
        val: ds.slice(val)?,
        test: ds.slice(test)?,
    })
}
