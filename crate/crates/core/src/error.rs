use thiserror::Error;

/// Errors produced by the driftlab library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("time {t} outside trajectory span [{start}, {end}]")]
    TimeOutOfSpan { t: f64, start: f64, end: f64 },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid interval: u ({u}) < t ({t})")]
    InvalidInterval { t: f64, u: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("segment {0} has no successor")]
    NoSuccessor(usize),

    #[error("need at least {needed} stable segments, found {found}")]
    InsufficientSegments { needed: usize, found: usize },

    #[error("degenerate episode: endpoint concepts are identical, mixture weight is unidentifiable")]
    DegenerateEpisode,

    #[error("target magnitude {target} unreachable after {restarts} restarts (best achieved {best})")]
    TargetUnreachable {
        target: f64,
        best: f64,
        restarts: usize,
    },

    #[error("unknown fixture: {0}")]
    UnknownFixture(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("learner error: {0}")]
    Learner(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DriftError {
    fn from(e: std::io::Error) -> Self {
        DriftError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DriftError>;
