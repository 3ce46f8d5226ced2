//! Model input construction: correlation-selected RAN counters, calendar peak
//! indicators, handover-weighted neighbor volumes, and the recipes combining them.

mod handover;
mod peak;
mod pearson;
mod recipe;

pub use handover::{handover_features, handover_weights, HandoverWeights};
pub use peak::{detect_peak_hours, peak_days_vector, peak_hours_vector, PeakProfile, DEFAULT_PEAK_THRESHOLD};
pub use pearson::{correlation_table, pearson, select_ran_features, CorrelationTable, DEFAULT_CORRELATION_THRESHOLD};
pub use recipe::{build_recipe, Column, ColumnKind, ColumnSource, FeatureRecipe, FeatureSettings, InputMatrix, Variant};
