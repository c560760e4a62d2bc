use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate cubic: repeated roots (discriminant {0:e})")]
    DegenerateCubic(f64),
    #[error("pole of the elliptic function at z = {0}")]
    PoleAt(Complex64),
    #[error("argument {s} lies below the real branch start {start}")]
    OutOfBranch { s: f64, start: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("degenerate case: {0}")]
    DegenerateCase(String),
    #[error("roots are not strictly ordered: {0}")]
    OrderingError(String),
    #[error("argument out of range: {0}")]
    RangeError(String),
    #[error("integrand negative at t = {at}")]
    NegativeIntegrand { at: f64 },
    #[error("formula denominator vanishes: {0}")]
    ZeroDenominator(&'static str),
    #[error("singular transformation: lm' - l'm = 0")]
    SingularTransform,
    #[error("branch error: {0}")]
    BranchError(String),
    #[error("no ellipse: {0}")]
    NoEllipse(String),
    #[error("point lies on the focal cut; a side hint is required")]
    OnCut,
    #[error("scale factor vanishes at a focus (cosh^2 xi = cos^2 eta)")]
    ScaleFactorZero,
    #[error("field is singular on the axis x^2 + y^2 = 0")]
    AxisSingularity,
    #[error("caustic reached at t = {t} (det J = {det:e})")]
    CausticReached { t: f64, det: f64 },
    #[error("flow inverse not found from any start point")]
    InverseNotFound,
    #[error("step too coarse: halving h moved the estimate by {shift:e} (> 3 SE = {bound:e})")]
    StepTooCoarse { shift: f64, bound: f64 },
    #[error("field is not strictly positive on the grid")]
    NonPositiveField,
    #[error("orbit trace is not periodic")]
    NotPeriodic,
    #[error("resolvent cubic has no positive root")]
    NoPositiveRoot,
    #[error("quadrature did not converge: estimated error {0:e}")]
    QuadratureFailed(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
