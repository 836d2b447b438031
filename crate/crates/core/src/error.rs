use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A pair of maps that should compose to zero does not.
    #[error("inconsistent differential: {0}")]
    InconsistentDifferential(String),

    #[error("invalid module: {0}")]
    InvalidModule(String),

    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),

    #[error("value outside window: {0}")]
    OutsideWindow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("contradictory extension: {0}")]
    Extension(String),

    #[error("{l} is not a topological generator of Z_2^x/{{±1}} (need l ≡ ±3 mod 8)")]
    NotAGenerator { l: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("result did not stabilize: {0}")]
    NotStable(String),

    #[error("no shift matches")]
    NoShift,

    #[error("ambiguous shift: candidates {0:?}")]
    AmbiguousShift(Vec<i64>),

    #[error("operator is not scalar on the kernel: {0}")]
    NotScalar(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short name of the variant, for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::InconsistentDifferential(_) => "inconsistent-differential",
            Error::InvalidModule(_) => "invalid-module",
            Error::InvalidPresentation(_) => "invalid-presentation",
            Error::OutsideWindow(_) => "outside-window",
            Error::Unsupported(_) => "unsupported",
            Error::Extension(_) => "extension",
            Error::NotAGenerator { .. } => "not-a-generator",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NotStable(_) => "not-stable",
            Error::NoShift => "no-shift",
            Error::AmbiguousShift(_) => "ambiguous-shift",
            Error::NotScalar(_) => "not-scalar",
            Error::Parse(_) => "parse",
        }
    }
}
