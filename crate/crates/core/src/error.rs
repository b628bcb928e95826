use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not positive definite after {attempts} factorization attempts")]
    FactorizationFailure { attempts: usize },

    #[error("circulant embedding has a negative eigenvalue {min:e} (largest {max:e})")]
    NegativeEigenvalue { min: f64, max: f64 },

    #[error("effective sample size {ess:.1} is below the floor {floor:.1}")]
    DegenerateWeights { ess: f64, floor: f64 },

    #[error("only {accepted} of {target} paths accepted within {draws} draws")]
    BudgetExhausted {
        accepted: usize,
        target: usize,
        draws: usize,
    },

    #[error("sample is empty")]
    EmptySample,

    #[error("weight at index {index} is not a finite nonnegative number")]
    NonfiniteWeight { index: usize },

    #[error("argument outside the domain: {0}")]
    DomainViolation(String),

    #[error("invalid configuration at `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("malformed input `{source_name}`: {reason}")]
    Format { source_name: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
