use thiserror::Error;

/// Coarse classification used by callers that must map failures onto exit
/// codes or HTTP statuses: bad input, a throw that cannot be analyzed, or a
/// broken internal invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Analysis,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion norm is zero or not finite")]
    DegenerateQuaternion,

    #[error("series too short: {got} samples, need more than {need}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("no strides found in segment")]
    NoStrides,

    #[error("streams share no common time window")]
    NoCommonWindow,

    #[error("no throw segment detected in the stream")]
    NoThrowDetected,

    #[error("stream clock skew {skew_ms:.3} ms exceeds allowed {max_ms:.3} ms")]
    ClockSkew { skew_ms: f64, max_ms: f64 },

    #[error("expected {expected} strides for {style}, found {found}")]
    StyleMismatch {
        style: String,
        expected: usize,
        found: usize,
    },

    #[error("empty series passed to distance computation")]
    EmptySeries,

    #[error("template has no AD_ref calibration; required for single-template assessment")]
    MissingCalibration,

    #[error("training set does not contain at least two classes")]
    DegenerateLabels,

    #[error("optimizer did not converge: max KKT violation {violation:.6e} after {passes} passes")]
    ConvergenceFailure { violation: f64, passes: usize },

    #[error("could not stratify folds after {attempts} attempts: {reason}")]
    StratificationFailure { attempts: usize, reason: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("corrupt sample at row {index}: {reason}")]
    CorruptSample { index: usize, reason: String },

    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    UnsupportedSchema { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            DegenerateQuaternion | InsufficientSamples { .. } | DimensionMismatch { .. }
            | CorruptSample { .. } | UnsupportedSchema { .. } | InvalidInput(_) | Config(_)
            | Io(_) | Json(_) | Csv(_) => ErrorKind::Input,
            NoStrides | NoCommonWindow | NoThrowDetected | ClockSkew { .. }
            | StyleMismatch { .. }
            | EmptySeries | MissingCalibration | DegenerateLabels
            | ConvergenceFailure { .. } | StratificationFailure { .. } => ErrorKind::Analysis,
            Internal(_) => ErrorKind::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
