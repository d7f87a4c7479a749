use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by the numerical modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("point x = {x} outside the grid domain [{lo}, {hi})")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("numerical failure: {message}{}{}",
        .node.map(|j| format!(" (node {j})")).unwrap_or_default(),
        .condition.map(|c| format!(" (condition estimate {c:.3e})")).unwrap_or_default())]
    NumericalFailure {
        message: String,
        node: Option<usize>,
        condition: Option<f64>,
    },

    #[error("resource limit: n = {n} exceeds the dense-matrix cap {cap}")]
    ResourceLimit { n: usize, cap: usize },

    #[error("invalid stencil: {0}")]
    InvalidStencil(String),

    #[error("blow-up suspected: max slope {max_slope:.3e}")]
    BlowUpSuspected { max_slope: f64 },

    #[error("step refused: {0}")]
    StepRefused(String),

    #[error("configuration error in `{field}`: {message}")]
    Configuration { field: String, message: String },
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::NumericalFailure {
            message: message.into(),
            node: None,
            condition: None,
        }
    }
}
