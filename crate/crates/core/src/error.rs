use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation failure: tail bound not certified at r = {r} within max_degree = {max_degree}")]
    TruncationFailure { r: f64, max_degree: usize },

    /// Refinement budget exhausted; usually a root sits numerically on the circle.
    #[error("quadrature divergence at r = {r} after {depth} refinement levels (last change {last_change:e})")]
    QuadratureDivergence { r: f64, depth: usize, last_change: f64 },

    #[error("root finding failure: residual {residual:e} at root {re} + {im}i exceeds target {target:e}")]
    RootFindingFailure { re: f64, im: f64, residual: f64, target: f64 },

    #[error("CircleRootProximity: a root of p - a lies within {threshold:e} of the circle |z| = {r} (after {attempts} attempt(s))")]
    CircleRootProximity { r: f64, threshold: f64, attempts: usize },

    #[error("statistical floor: {what} requires at least {required} trials, got {got}")]
    StatisticalFloor { what: String, required: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::TruncationFailure { .. }
                | Error::QuadratureDivergence { .. }
                | Error::RootFindingFailure { .. }
                | Error::CircleRootProximity { .. }
        )
    }

    /// Whether jittering the radius could plausibly cure this failure.
    pub fn is_circle_root(&self) -> bool {
        matches!(self, Error::QuadratureDivergence { .. } | Error::CircleRootProximity { .. })
    }

    /// Short stable tag used in persisted failure columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::TruncationFailure { .. } => "TruncationFailure",
            Error::QuadratureDivergence { .. } => "QuadratureDivergence",
            Error::RootFindingFailure { .. } => "RootFindingFailure",
            Error::CircleRootProximity { .. } => "CircleRootProximity",
            Error::StatisticalFloor { .. } => "StatisticalFloor",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
