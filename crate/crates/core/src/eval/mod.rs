//! Forecast quality metrics and result reports.

mod metrics;
mod report;

pub use metrics::{mae, mse, overprovisioning_volume, sla_violation_rate, test_loss, Overprovisioning};
pub use report::{
    build_report, plot_source_csv, reference_rows, CellMetrics, CellStatus, EvalReport, PredictionSet, ReferenceRow,
    ReportCell, ReportMetadata,
};
