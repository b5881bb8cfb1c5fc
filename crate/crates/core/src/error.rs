use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("differencing state mismatch: {0}")]
    StateMismatch(String),

    #[error("cannot scale a constant series (min = max = {0})")]
    DegenerateScale(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid cell {value:?} at row {row}, column {column}")]
    Cell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{query:?} not found{}", suggest(.suggestions))]
    NotFound {
        query: String,
        suggestions: Vec<String>,
    },

    #[error("{date} is outside the available range {first}..={last}")]
    OutOfRange {
        date: NaiveDate,
        first: NaiveDate,
        last: NaiveDate,
    },

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_objective})")]
    Convergence {
        iterations: usize,
        best_objective: f64,
        best_params: Vec<f64>,
    },

    #[error("no viable model in the search grid: {0}")]
    NoViableModel(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("multiplicative model requires strictly positive values, got {value} at index {index}")]
    Positivity { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged (non-finite loss at epoch {epoch}); try a lower learning rate")]
    Divergence { epoch: usize },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("residual series too short: have {have}, need at least {need}")]
    InsufficientResiduals { have: usize, need: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("actual value is zero at index {index}; MAPE undefined")]
    ZeroActual { index: usize },

    #[error("lower bound exceeds upper bound at index {index}")]
    InvalidInterval { index: usize },

    #[error("horizon must be at least 1")]
    InvalidHorizon,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

fn suggest(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", suggestions.join(", "))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Format(e.to_string()),
        }
    }
}
