use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {point:?} lies outside the safe region of chart `{chart}`")]
    Domain { chart: String, point: Vec<f64> },

    #[error("metric is not positive definite at {point:?}")]
    Metric { point: Vec<f64> },

    #[error("tensor shape mismatch: {0}")]
    Shape(String),

    #[error("integration failed at parameter {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("geodesic left the chart at time {time}")]
    DomainExit { time: f64, point: Vec<f64> },

    #[error("complex structure is not compatible with the metric at {point:?} (defect {defect:e})")]
    Compatibility { point: Vec<f64>, defect: f64 },

    #[error("structure is not lcK at {point:?}: residual {residual:e}")]
    NotLck { point: Vec<f64>, residual: f64 },

    #[error("Lee form vanishes at {point:?}")]
    Singular { point: Vec<f64> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("connection normalization broken: {0}")]
    Bundle(String),

    #[error("inconsistent evidence: {0}")]
    Inconsistent(String),

    #[error("loop `{label}` is too large for the matrix logarithm (|P - I| = {distance:.3})")]
    LoopTooLarge { label: String, distance: f64 },

    #[error("unknown selector: {0}")]
    Selector(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
