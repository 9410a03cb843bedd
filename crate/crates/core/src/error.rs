use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("(alpha, beta) = ({alpha}, {beta}) lies outside the region {region}")]
    Region {
        alpha: f64,
        beta: f64,
        region: &'static str,
    },

    #[error("time average does not settle: {0}")]
    NoKbm(String),

    #[error("fixed-point iteration does not contract at lambda = {lambda}")]
    LambdaTooSmall { lambda: f64 },

    #[error("noise streams are not independent: {0}")]
    IndependenceViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("expression error at offset {offset}: {message}")]
    Expr { offset: usize, message: String },

    #[error("bad binary data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for failures caused by discretization or numerical resolution
    /// rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Resolution(_)
                | Error::StepSize(_)
                | Error::Degenerate(_)
                | Error::NoKbm(_)
                | Error::LambdaTooSmall { .. }
        )
    }
}
