use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report. `code()` gives the stable
/// machine-readable tag written into JSON reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: estimate {err_est:.3e} for target {target:.3e}")]
    NonConvergence { value_re: f64, value_im: f64, err_est: f64, target: f64 },
    #[error("integrand is not finite at x = {x}")]
    SingularIntegrand { x: f64 },
    #[error("poles at {a} and {b} are closer than the excision resolution")]
    PoleCollision { a: f64, b: f64 },
    #[error("zero sample at index {index}")]
    ZeroSample { index: usize },
    #[error("phase jump of {gap:.4} rad between samples {index} and {next}", next = index + 1)]
    JumpTooLarge { index: usize, gap: f64 },
    #[error("function vanishes on the contour near {re} + {im}i")]
    ZeroOnContour { re: f64, im: f64 },
    #[error("winding number {value:.4} is not close to an integer")]
    NonIntegerWinding { value: f64 },
    #[error("subdivided contours count {children} zeros, the enclosing one {parent}")]
    CountMismatch { parent: i64, children: i64 },
    #[error("energy {energy} lies outside the continuum")]
    OutsideContinuum { energy: f64 },
    #[error("density of states diverges at the threshold")]
    ThresholdDivergence,
    #[error("frequency {re} + {im}i lies on the continuum")]
    OnContinuum { re: f64, im: f64 },
    #[error("frequency is zero")]
    ZeroFrequency,
    #[error("|omega| = {magnitude:.3e} is below the threshold resolution")]
    NearThreshold { magnitude: f64 },
    #[error("zeta = {zeta} <= 1: the bare propagator integral does not converge")]
    ZetaNotDivergent { zeta: f64 },
    #[error("resolvent is singular at {re} + {im}i (condition {condition:.3e})")]
    SingularResolvent { re: f64, im: f64, condition: f64 },
    #[error("resolvent is singular on the continuum at E = {energy}")]
    BoundStateInContinuum { energy: f64 },
    #[error("det S denominator vanishes at E = {energy}")]
    ZeroDenominator { energy: f64 },
    #[error("det S vanishes at E = {energy}")]
    ZeroDetS { energy: f64 },
    #[error("no universal zero-energy limit for this dispersion: {reason}")]
    NonUniversal { reason: String },
    #[error("separable coupling strength is zero")]
    ZeroCoupling,
    #[error("grid too coarse: {detail}")]
    GridTooCoarse { detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "NonConvergence",
            Error::SingularIntegrand { .. } => "SingularIntegrand",
            Error::PoleCollision { .. } => "PoleCollision",
            Error::ZeroSample { .. } => "ZeroSample",
            Error::JumpTooLarge { .. } => "JumpTooLarge",
            Error::ZeroOnContour { .. } => "ZeroOnContour",
            Error::NonIntegerWinding { .. } => "NonIntegerWinding",
            Error::CountMismatch { .. } => "CountMismatch",
            Error::OutsideContinuum { .. } => "OutsideContinuum",
            Error::ThresholdDivergence => "ThresholdDivergence",
            Error::OnContinuum { .. } => "OnContinuum",
            Error::ZeroFrequency => "ZeroFrequency",
            Error::NearThreshold { .. } => "NearThreshold",
            Error::ZetaNotDivergent { .. } => "ZetaNotDivergent",
            Error::SingularResolvent { .. } => "SingularResolvent",
            Error::BoundStateInContinuum { .. } => "BoundStateInContinuum",
            Error::ZeroDenominator { .. } => "ZeroDenominator",
            Error::ZeroDetS { .. } => "ZeroDetS",
            Error::NonUniversal { .. } => "NonUniversal",
            Error::ZeroCoupling => "ZeroCoupling",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse(_) => "ParseError",
            Error::Validation(_) => "ValidationError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
