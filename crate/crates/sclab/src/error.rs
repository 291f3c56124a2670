use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported jet order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("degenerate form: {0}")]
    DegenerateForm(String),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("not of Ricci type: |W| = {w_norm:e} exceeds {tol:e}")]
    NotRicciType { w_norm: f64, tol: f64 },
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("point is off the cone: normalizer {0:e} is not positive")]
    OffCone(f64),
    #[error("chart too large: normalizer reaches {min:e} inside radius {radius}")]
    ChartTooLarge { min: f64, radius: f64 },
    #[error("degenerate horizontal space: {0}")]
    DegenerateHorizontal(String),
    #[error("not exact: {0}")]
    NotExact(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("need more samples: got {got}, need at least {need}")]
    NeedMoreSamples { got: usize, need: usize },
    #[error("quadrature truncation: {0}")]
    Truncation(String),
    #[error("not converged: estimated error {estimate:e} exceeds {tol:e}")]
    NotConverged { estimate: f64, tol: f64 },
    #[error("no barycentre found: {0}")]
    NoBarycentre(String),
    #[error("certification failed: {what} deviates by {deviation:e} (tolerance {tol:e})")]
    CertificationFailed { what: String, deviation: f64, tol: f64 },
    #[error("amplitude singularity: {0}")]
    AmplitudeSingularity(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
