use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum BgkError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown key `{0}` in parameter file")]
    UnknownKey(String),

    #[error("parameter file: {0}")]
    ParamsFormat(String),

    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("grid: {0}")]
    Grid(String),

    #[error("size mismatch: field has {field} values, grid has {grid} nodes")]
    SizeMismatch { field: usize, grid: usize },

    #[error("occupancy {value} at node {node} outside [0, 1]")]
    OccupancyOutOfRange { node: usize, value: f64 },

    #[error(
        "no sign change after {expansions} expansions: residual({lo:e}) is {lo_sign}, residual({hi:e}) is {hi_sign}"
    )]
    BracketFailure {
        expansions: usize,
        lo: f64,
        hi: f64,
        lo_sign: &'static str,
        hi_sign: &'static str,
    },

    #[error("root iteration cap {iterations} reached; best bracket [{lo:e}, {hi:e}]")]
    IterationCap { iterations: usize, lo: f64, hi: f64 },

    #[error("shift of {cells:.3} cells exceeds the bound of {limit} cell(s); use dt <= {suggested_dt:e} s")]
    ShiftBound { cells: f64, limit: f64, suggested_dt: f64 },

    #[error("reference oracle: {0}")]
    Oracle(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BgkError {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        BgkError::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        BgkError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BgkError>;
