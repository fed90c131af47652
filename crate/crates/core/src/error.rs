use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid axis {axis} has {cells} cells; at least 2 are required")]
    GridTooSmall { axis: usize, cells: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("projective map degenerate: 1 + t*alpha = {factor} at t = {t}")]
    DegenerateMap { t: f64, factor: f64 },

    #[error("matrix is singular (det = {det})")]
    SingularMatrix { det: f64 },

    #[error("point {point:?} lies outside the sampled domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("homogeneous tensor evaluated at non-positive lambda = {lambda}")]
    OutsideCone { lambda: f64 },

    #[error("tensor field evaluated at its singular point")]
    SingularPoint,

    #[error("divergence check failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    DivergenceCheck { residual: f64, tolerance: f64 },

    #[error("{fraction:.4} of cells are not positive semi-definite")]
    NotPositive { fraction: f64 },

    #[error("CFL number {cfl:.4} exceeds the limit {limit} at step {step}")]
    CflViolation { step: usize, cfl: f64, limit: f64 },

    #[error("gas support reached the outflow boundary at step {step} (t = {time})")]
    SupportNearBoundary { step: usize, time: f64 },

    #[error("adiabatic exponent {gamma} is not the mono-atomic value {gamma_d}")]
    NotMonoatomic { gamma: f64, gamma_d: f64 },

    #[error("trajectory came within {distance:e} of the singularity")]
    SingularTrajectory { distance: f64 },

    #[error("ODE integrator failed: {0}")]
    Integrator(String),

    #[error("kinetic support left the phase-space domain (lost mass {lost_mass:e})")]
    SupportLeftDomain { lost_mass: f64 },

    #[error("at least {min} Monte-Carlo samples are required, got {requested}")]
    TooFewSamples { requested: usize, min: usize },

    #[error("input is identically zero")]
    ZeroInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
