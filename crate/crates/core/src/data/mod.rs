//! Hourly per-cell RAN counter data: identifiers, time axis, datasets, and the
//! slicing/normalization/windowing machinery the models train on.

mod csv_io;
mod folds;
mod normalize;
mod split;
mod window;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{ingest_csv, read_dataset_csv, write_dataset_csv, GapPolicy, TIMESTAMP_FORMAT};
pub use folds::{make_folds, Fold, FoldPlan, DEFAULT_FOLDS, TWO_MONTHS_HOURS};
pub use normalize::{fit_normalizer, Normalizer, Stats, MIN_STD};
pub use split::{split_dataset, DatasetSplit, SplitSpec, HOURS_PER_WEEK};
pub use window::{windowize, windows_for_targets, Sample};

/// A cell identifier such as `GU14`: two-letter site, sector digit, carrier digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    site: [u8; 2],
    sector: u8,
    carrier: u8,
}

impl CellId {
    pub fn new(site: &str, sector: u8, carrier: u8) -> Result<Self> {
        let bytes = site.as_bytes();
        let valid_site = bytes.len() == 2 && bytes.iter().all(u8::is_ascii_uppercase);
        if !valid_site || !(1..=9).contains(&sector) || !(1..=9).contains(&carrier) {
            return Err(Error::InvalidCellId(format!("{site}{sector}{carrier}")));
        }
        Ok(Self {
            site: [bytes[0], bytes[1]],
            sector,
            carrier,
        })
    }

    pub fn site(&self) -> &str {
        // Constructed from ASCII uppercase only.
        std::str::from_utf8(&self.site).unwrap()
    }

    pub fn sector(&self) -> u8 {
        self.sector
    }

    pub fn carrier(&self) -> u8 {
        self.carrier
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.site(), self.sector, self.carrier)
    }
}

impl FromStr for CellId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 4 || !b[2].is_ascii_digit() || !b[3].is_ascii_digit() {
            return Err(Error::InvalidCellId(s.to_string()));
        }
        CellId::new(&s[..2], b[2] - b'0', b[3] - b'0')
    }
}

impl Serialize for CellId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One of the twenty RAN counters `F1`..`F20`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureLabel(u8);

impl FeatureLabel {
    /// Downlink traffic volume, the prediction target.
    pub const DL_VOLUME: FeatureLabel = FeatureLabel(10);
    pub const COUNT: u8 = 20;

    pub fn new(index: u8) -> Result<Self> {
        if (1..=Self::COUNT).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::UnknownFeature(format!("F{index}")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = FeatureLabel> {
        (1..=Self::COUNT).map(FeatureLabel)
    }

    /// Counter name as listed in the operator's measurement catalog.
    pub fn name(self) -> &'static str {
        FEATURE_NAMES[(self.0 - 1) as usize]
    }
}

const FEATURE_NAMES: [&str; 20] = [
    "Num. of Initial E-RABs Attempted to Setup",
    "RACH Setup Succ. Rate",
    "Avg. RACH Timing Advance",
    "Num. of RRC Attempts",
    "Num. of S1 Signalling Establishment Attempt",
    "DL PDCP Cell Thr.",
    "UL PDCP Cell Thr.",
    "DL PDCP User Thr.",
    "UL PDCP User Thr.",
    "DL Traffic Volume",
    "UL Traffic Volume",
    "Avg. UL RSSI Weight PUCCH",
    "Avg. UL RSRP PUSCH",
    "Avg. UL RSRP PUCCH",
    "Avg. CQI",
    "Avg. Num. of Active Users in DL",
    "Avg. Num. of Active Users in UL",
    "Num. of Avg. Simultaneous RRC Connected Users",
    "DL PRB Utilisation",
    "UL PRB Utilisation",
];

impl fmt::Display for FeatureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

impl FromStr for FeatureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('F')
            .and_then(|n| n.parse::<u8>().ok())
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
            .and_then(|n| FeatureLabel::new(n).map_err(|_| Error::UnknownFeature(s.to_string())))
    }
}

impl Serialize for FeatureLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hourly time axis: `len` steps starting at an hour-aligned `start`.
///
/// Index arithmetic is valid beyond `len` so that calendar features can be
/// computed for future timestamps during recursive forecasting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: NaiveDateTime,
    len: usize,
}

impl TimeGrid {
    pub fn new(start: NaiveDateTime, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("time grid must have at least one step".into()));
        }
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::Config(format!("grid start {start} is not hour-aligned")));
        }
        Ok(Self { start, len })
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::hours(index as i64)
    }

    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = ts.signed_duration_since(self.start);
        if delta.num_seconds() < 0 || delta.num_seconds() % 3600 != 0 {
            return None;
        }
        let idx = delta.num_hours() as usize;
        (idx < self.len).then_some(idx)
    }

    pub fn hour_of_day(&self, index: usize) -> u32 {
        self.timestamp(index).hour()
    }

    pub fn weekday(&self, index: usize) -> Weekday {
        self.timestamp(index).weekday()
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len {
            return Err(Error::Config(format!(
                "range {range:?} outside grid of length {}",
                self.len
            )));
        }
        TimeGrid::new(self.timestamp(range.start), range.len())
    }
}

/// A labeled counter series aligned to a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl FeatureSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

/// All counters recorded for one cell over one time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDataset {
    cell: CellId,
    grid: TimeGrid,
    series: BTreeMap<FeatureLabel, Vec<f64>>,
}

impl CellDataset {
    pub fn new(cell: CellId, grid: TimeGrid, series: BTreeMap<FeatureLabel, Vec<f64>>) -> Result<Self> {
        if !series.contains_key(&FeatureLabel::DL_VOLUME) {
            return Err(Error::UnknownFeature(format!("{} (required)", FeatureLabel::DL_VOLUME)));
        }
        for (label, values) in &series {
            if values.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} values for {label}", grid.len()),
                    actual: values.len().to_string(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{label} contains non-finite values")));
            }
        }
        Ok(Self { cell, grid, series })
    }

    pub fn cell(&self) -> CellId {
        self.cell
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = FeatureLabel> + '_ {
        self.series.keys().copied()
    }

    pub fn get(&self, label: FeatureLabel) -> Result<&[f64]> {
        self.series
            .get(&label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownFeature(label.to_string()))
    }

    pub fn dl_volume(&self) -> &[f64] {
        &self.series[&FeatureLabel::DL_VOLUME]
    }

    pub fn series(&self) -> &BTreeMap<FeatureLabel, Vec<f64>> {
        &self.series
    }

    /// Contiguous sub-range of the dataset as a new dataset.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        let grid = self.grid.slice(range.clone())?;
        let series = self
            .series
            .iter()
            .map(|(k, v)| (*k, v[range.clone()].to_vec()))
            .collect();
        Ok(Self {
            cell: self.cell,
            grid,
            series,
        })
    }

    /// Replaces one series, keeping the grid.
    pub fn with_series(mut self, label: FeatureLabel, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch(values.len(), self.len()));
        }
        self.series.insert(label, values);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    pub(crate) fn monday() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn cell_id_renders_and_parses() {
        let id: CellId = "GU14".parse().unwrap();
        assert_eq!(id.site(), "GU");
        assert_eq!(id.sector(), 1);
        assert_eq!(id.carrier(), 4);
        assert_eq!(id.to_string(), "GU14");
        assert!("gu14".parse::<CellId>().is_err());
        assert!("GU04".parse::<CellId>().is_err());
        assert!("GUX4".parse::<CellId>().is_err());
        assert!("GU145".parse::<CellId>().is_err());
    }

    proptest! {
        #[test]
        fn cell_id_round_trips(a in b'A'..=b'Z', b in b'A'..=b'Z', s in 1u8..=9, c in 1u8..=9) {
            let site = String::from_utf8(vec![a, b]).unwrap();
            let id = CellId::new(&site, s, c).unwrap();
            prop_assert_eq!(id.to_string().parse::<CellId>().unwrap(), id);
        }

        #[test]
        fn grid_index_timestamp_bijective(len in 1usize..5000, i in 0usize..5000) {
            let grid = TimeGrid::new(monday(), len).unwrap();
            let i = i % len;
            prop_assert_eq!(grid.index_of(grid.timestamp(i)), Some(i));
        }
    }

    #[test]
    fn grid_calendar() {
        let grid = TimeGrid::new(monday(), 200).unwrap();
        assert_eq!(grid.weekday(0), Weekday::Mon);
        assert_eq!(grid.hour_of_day(25), 1);
        assert_eq!(grid.weekday(24 * 5), Weekday::Sat);
        assert_eq!(grid.index_of(grid.timestamp(200)), None);
        assert!(TimeGrid::new(monday(), 0).is_err());
        assert!(TimeGrid::new(monday() + Duration::minutes(30), 3).is_err());
    }

    #[test]
    fn feature_labels() {
        assert_eq!("F10".parse::<FeatureLabel>().unwrap(), FeatureLabel::DL_VOLUME);
        assert!("F21".parse::<FeatureLabel>().is_err());
        assert!("F0".parse::<FeatureLabel>().is_err());
        assert!("X1".parse::<FeatureLabel>().is_err());
        assert_eq!(FeatureLabel::all().count(), 20);
        assert_eq!(FeatureLabel::DL_VOLUME.name(), "DL Traffic Volume");
    }

    #[test]
    fn dataset_requires_dl_volume() {
        let grid = TimeGrid::new(monday(), 2).unwrap();
        let id: CellId = "GU14".parse().unwrap();
        let mut m = BTreeMap::new();
        m.insert(FeatureLabel::new(1).unwrap(), vec![1.0, 2.0]);
        assert!(CellDataset::new(id, grid, m.clone()).is_err());
        m.insert(FeatureLabel::DL_VOLUME, vec![1.0]);
        assert!(CellDataset::new(id, grid, m.clone()).is_err());
        m.insert(FeatureLabel::DL_VOLUME, vec![1.0, 3.0]);
        let ds = CellDataset::new(id, grid, m).unwrap();
        let s = ds.slice(1..2).unwrap();
        assert_eq!(s.dl_volume(), &[3.0]);
        assert_eq!(s.grid().start(), monday() + Duration::hours(1));
    }
}
