use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular metric: J = {jac:e} at X = ({:.6}, {:.6}) (threshold {threshold:e})", coords[0], coords[1])]
    SingularMetric { jac: f64, coords: [f64; 2], threshold: f64 },

    #[error("chart coordinate ({:.6}, {:.6}) lies outside chart {chart}", coords[0], coords[1])]
    OutOfDomain { chart: usize, coords: [f64; 2] },

    #[error("missing derivative: {0}")]
    MissingDerivative(String),

    #[error("Jacobian collapsed to {jac:e} at t = {t}")]
    JacobianCollapse { t: f64, jac: f64 },

    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("nonpositive density {value:e}")]
    NonpositiveDensity { value: f64 },

    #[error("nonpositive temperature {value:e}")]
    NonpositiveTemperature { value: f64 },

    #[error("inconclusive: mismatch {mismatch:e} is below the quadrature noise {noise:e}")]
    QuadratureFloor { mismatch: f64, noise: f64 },

    #[error("degenerate gradient: |grad f| = {norm:e} with a nonlinear flux law")]
    DegenerateGradient { norm: f64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("expression error at column {pos}: {msg}")]
    Expr { pos: usize, msg: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("scenario `{scenario}`, suite `{suite}`: {source}")]
    Suite { scenario: String, suite: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
