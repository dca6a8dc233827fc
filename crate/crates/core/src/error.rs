use thiserror::Error;

pub type Result<T, E = AdmError> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AdmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("coefficient array has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("parameter `{name}` = {value} outside legal range {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("field is not divergence-free (max |k·v| = {residual:e})")]
    NotDivergenceFree { residual: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("CFL violation: dt = {dt:e} exceeds stable limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("non-finite value encountered at t = {time}")]
    NonFinite { time: f64 },
    #[error("need at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },
    #[error("invalid family plan: {0}")]
    InvalidPlan(String),
    #[error("convergence report is incomplete")]
    IncompleteReport,
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
}
