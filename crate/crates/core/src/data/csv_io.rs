use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};

use super::{CellDataset, CellId, FeatureLabel, TimeGrid};
use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// How missing hourly values are repaired on ingestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapPolicy {
    /// Longest run of consecutive missing hours that is linearly interpolated.
    pub max_gap_hours: usize,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self { max_gap_hours: 3 }
    }
}

pub(crate) fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Reads `<dir>/<CELL>.csv`; the cell id is taken from the file stem.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<CellDataset> {
    let path = path.as_ref();
    let cell: CellId = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidCellId(path.display().to_string()))?
        .parse()?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(file, cell, GapPolicy::default())
}

pub fn read_dataset_csv<R: Read>(reader: R, cell: CellId, policy: GapPolicy) -> Result<CellDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let malformed = |line: usize, reason: String| Error::MalformedRow { line, reason };

    if header.get(0) != Some("timestamp") {
        return Err(malformed(1, "first column must be 'timestamp'".into()));
    }
    let mut labels = Vec::with_capacity(header.len() - 1);
    for name in header.iter().skip(1) {
        let label: FeatureLabel = name
            .parse()
            .map_err(|_| malformed(1, format!("unknown column '{name}'")))?;
        if labels.contains(&label) {
            return Err(malformed(1, format!("duplicate column '{name}'")));
        }
        labels.push(label);
    }
    if !labels.contains(&FeatureLabel::DL_VOLUME) {
        return Err(malformed(1, "missing required column F10".into()));
    }

    let mut start: Option<NaiveDateTime> = None;
    let mut prev: Option<(NaiveDateTime, usize)> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != labels.len() + 1 {
            return Err(malformed(line, format!("expected {} fields, got {}", labels.len() + 1, record.len())));
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| malformed(line, format!("bad timestamp '{}'", &record[0])))?;
        if ts.minute() != 0 || ts.second() != 0 {
            return Err(Error::NonHourlyTimestamps {
                line,
                reason: format!("{ts} is not on an hour boundary"),
            });
        }
        let index = match prev {
            None => {
                start = Some(ts);
                0
            }
            Some((p, pi)) => {
                let step = ts.signed_duration_since(p).num_hours();
                if ts <= p {
                    return Err(Error::NonHourlyTimestamps {
                        line,
                        reason: format!("{ts} does not follow {p}"),
                    });
                }
                pi + step as usize
            }
        };
        for col in columns.iter_mut() {
            col.resize(index, f64::NAN);
        }
        for (col, field) in columns.iter_mut().zip(record.iter().skip(1)) {
            col.push(parse_value(field).map_err(|r| malformed(line, r))?);
        }
        prev = Some((ts, index));
    }
    let start = start.ok_or_else(|| malformed(2, "no data rows".into()))?;
    let len = columns[0].len();

    let mut series = BTreeMap::new();
    for (label, mut values) in labels.into_iter().zip(columns) {
        fill_gaps(&label.to_string(), &mut values, policy)?;
        series.insert(label, values);
    }
    CellDataset::new(cell, TimeGrid::new(start, len)?, series)
}

fn parse_value(field: &str) -> std::result::Result<f64, String> {
    if field.is_empty() || field.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("bad value '{field}'")),
    }
}

/// Linearly interpolates NaN runs no longer than the policy allows.
fn fill_gaps(label: &str, values: &mut [f64], policy: GapPolicy) -> Result<()> {
    let mut i = 0;
    while i < values.len() {
        if !values[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < values.len() && values[i].is_nan() {
            i += 1;
        }
        let run = i - start;
        let too_long = Error::GapTooLong {
            label: label.to_string(),
            start,
            hours: run,
            limit: policy.max_gap_hours,
        };
        if run > policy.max_gap_hours || start == 0 || i == values.len() {
            return Err(too_long);
        }
        let (a, b) = (values[start - 1], values[i]);
        for (k, v) in values[start..i].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / (run + 1) as f64;
            *v = a + (b - a) * frac;
        }
    }
    Ok(())
}

/// Writes `timestamp,F..` rows using shortest round-trip float formatting.
pub fn write_dataset_csv<W: Write>(ds: &CellDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let labels: Vec<FeatureLabel> = ds.labels().collect();
    let mut header = vec!["timestamp".to_string()];
    header.extend(labels.iter().map(|l| l.to_string()));
    w.write_record(&header)?;
    for t in 0..ds.len() {
        let mut row = vec![ds.grid().timestamp(t).format(TIMESTAMP_FORMAT).to_string()];
        for l in &labels {
            row.push(ds.get(*l)?[t].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
