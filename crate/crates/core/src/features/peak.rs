use chrono::Weekday;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSeries, TimeGrid};
use crate::error::{Error, Result};

pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.2;

/// Busy hours of a cell, learned from where each day's DL maximum falls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakProfile {
    pub peak_hours: Vec<u32>,
    /// Fraction of days whose maximum fell in each hour of the day.
    pub occurrence: Vec<f64>,
    pub threshold: f64,
    pub weekend: Vec<Weekday>,
}

impl PeakProfile {
    pub fn is_peak_hour(&self, hour: u32) -> bool {
        self.peak_hours.contains(&hour)
    }

    pub fn is_weekend(&self, day: Weekday) -> bool {
        self.weekend.contains(&day)
    }
}

/// 1 on weekday hours, 0 on hours whose day is in `weekend`.
pub fn peak_days_vector(grid: &TimeGrid, weekend: &[Weekday]) -> FeatureSeries {
    let values = (0..grid.len())
        .map(|t| if weekend.contains(&grid.weekday(t)) { 0.0 } else { 1.0 })
        .collect();
    FeatureSeries::new("peak_days", values)
}

/// Counts, over every complete calendar day, the hour at which DL volume peaks
/// (earliest hour on ties) and keeps hours whose share of days exceeds `threshold`.
pub fn detect_peak_hours(f10: &[f64], grid: &TimeGrid, threshold: f64, weekend: &[Weekday]) -> Result<PeakProfile> {
    if f10.len() != grid.len() {
        return Err(Error::LengthMismatch(f10.len(), grid.len()));
    }
    if f10.len() < 48 {
        return Err(Error::TooShortSeries {
            required: 48,
            actual: f10.len(),
        });
    }
    let first_midnight = (0..24).find(|&t| grid.hour_of_day(t) == 0).unwrap_or(0);
    let mut counts = [0usize; 24];
    let mut days = 0usize;
    for day in f10[first_midnight..].chunks_exact(24) {
        let mut best = 0;
        for (h, v) in day.iter().enumerate() {
            if *v > day[best] {
                best = h;
            }
        }
        counts[best] += 1;
        days += 1;
    }
    let occurrence: Vec<f64> = counts.iter().map(|c| *c as f64 / days as f64).collect();
    let peak_hours = (0..24u32).filter(|h| occurrence[*h as usize] > threshold).collect();
    Ok(PeakProfile {
        peak_hours,
        occurrence,
        threshold,
        weekend: weekend.to_vec(),
    })
}

/// 1 on hours of the day listed as peak hours, 0 elsewhere.
pub fn peak_hours_vector(profile: &PeakProfile, grid: &TimeGrid) -> FeatureSeries {
    let values = (0..grid.len())
        .map(|t| if profile.is_peak_hour(grid.hour_of_day(t)) { 1.0 } else { 0.0 })
        .collect();
    FeatureSeries::new("peak_hours", values)
}
