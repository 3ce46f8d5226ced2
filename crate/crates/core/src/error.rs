use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset too short: need {required} hours, got {actual}")]
    DatasetTooShort { required: usize, actual: usize },

    #[error("feature {label} is constant (std {std:e}) and cannot be normalized or correlated")]
    ConstantFeature { label: String, std: f64 },

    #[error("infeasible fold plan: {0}")]
    InfeasiblePlan(String),

    #[error("unknown feature label '{0}'")]
    UnknownFeature(String),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("non-hourly timestamp at line {line}: {reason}")]
    NonHourlyTimestamps { line: usize, reason: String },

    #[error("gap of {hours} missing hours in {label} starting at index {start} exceeds limit of {limit}")]
    GapTooLong {
        label: String,
        start: usize,
        hours: usize,
        limit: usize,
    },

    #[error("invalid cell id '{0}'")]
    InvalidCellId(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inconsistent handover matrix: {0}")]
    InconsistentHandover(String),

    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("input is constant; correlation undefined")]
    ConstantInput,

    #[error("empty input")]
    Empty,

    #[error("series too short: need at least {required} values, got {actual}")]
    TooShortSeries { required: usize, actual: usize },

    #[error("no series for handover neighbor {0}")]
    MissingNeighborSeries(String),

    #[error("cell {cell} has no {direction} handover neighbors")]
    EmptyCluster { cell: String, direction: String },

    #[error("loss weight must be positive, got {0}")]
    NonPositiveWeight(f64),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("every grid point diverged")]
    AllDiverged,

    #[error("empty search range")]
    EmptySearchRange,

    #[error("no model for neighbor {0}")]
    MissingNeighborModel(String),

    #[error("missing model for {0}")]
    MissingModel(String),

    #[error("artifact {path} was produced by config {found}, expected {expected}")]
    ConfigMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("SLA constraint unsatisfied: best violation rate {rate:.4} above target {target:.4}")]
    ConstraintUnsatisfied { target: f64, rate: f64 },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::ConfigMismatch { .. } | Error::InfeasiblePlan(_) | Error::NonPositiveWeight(_) => 2,
            Error::DatasetTooShort { .. }
            | Error::ConstantFeature { .. }
            | Error::UnknownFeature(_)
            | Error::MalformedRow { .. }
            | Error::NonHourlyTimestamps { .. }
            | Error::GapTooLong { .. }
            | Error::InvalidCellId(_)
            | Error::InconsistentHandover(_)
            | Error::MissingNeighborSeries(_)
            | Error::EmptyCluster { .. }
            | Error::Csv(_) => 3,
            Error::Divergence { .. } | Error::AllDiverged => 4,
            Error::ConstraintUnsatisfied { .. } => 5,
            _ => 1,
        }
    }

    /// The innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
