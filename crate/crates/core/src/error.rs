use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("point {point:?} outside domain [{lower:?}, {upper:?}]")]
    OutOfDomain {
        point: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the caller's data rather than by computation.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::OutOfDomain { .. } | Error::NotFound(_) | Error::Json(_) | Error::Csv(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
