use thiserror::Error;

/// Errors raised across the algebra, classification and geometry layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("component {0} has a nonzero constant term")]
    NonzeroConstant(usize),
    #[error("lambda must differ from 0 and 1")]
    InvalidLambda,
    #[error("INFINITE: quotient does not stabilize")]
    Infinite,
    #[error("REGULAR: germ is a submersion")]
    Regular,
    #[error("UNRECOGNIZED: {0}")]
    Unrecognized(String),
    #[error("NOT_NICE_DIMENSIONS: (2n, q) = ({}, {q}) is not a pair of nice dimensions", 2 * .n)]
    NotNiceDimensions { n: usize, q: usize },
    #[error("DOMAIN: {0}")]
    Domain(String),
    #[error("invalid germ class: {0}")]
    InvalidClass(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("immersion failure at parameter {0:?}")]
    ImmersionFailure(Vec<f64>),
    #[error("ill-conditioned frame alignment (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("continuation failed after {steps} steps at (s, t) = ({s}, {t})")]
    ContinuationFailure { steps: usize, s: f64, t: f64 },
}

impl Error {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            Error::NonzeroConstant(_) => "NONZERO_CONSTANT",
            Error::InvalidLambda => "INVALID_LAMBDA",
            Error::Infinite => "INFINITE",
            Error::Regular => "REGULAR",
            Error::Unrecognized(_) => "UNRECOGNIZED",
            Error::NotNiceDimensions { .. } => "NOT_NICE_DIMENSIONS",
            Error::Domain(_) => "DOMAIN",
            Error::InvalidClass(_) => "INVALID_CLASS",
            Error::Parse(_) => "PARSE",
            Error::ImmersionFailure(_) => "IMMERSION_FAILURE",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::ContinuationFailure { .. } => "CONTINUATION_FAILURE",
        }
    }

    /// Whether the error is a mathematical outcome rather than bad input.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::Infinite | Error::Regular | Error::Unrecognized(_) | Error::NotNiceDimensions { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
