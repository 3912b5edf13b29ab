use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {family} parameters: {constraint}")]
    InvalidParameter {
        family: &'static str,
        constraint: String,
    },

    #[error("not an admissible N-function: {0}")]
    NotAdmissible(String),

    #[error("index estimation failed: {0}")]
    IndexEstimation(String),

    #[error("derivative is not strictly increasing near t = {t:e}; inverse is ill-defined")]
    NotStrictlyIncreasing { t: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("non-finite integrand value at s = {at:e}")]
    NonFinite { at: f64 },

    #[error("no finite scaling brackets the Luxemburg norm")]
    NonNormable,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no sign change of u(1) found for d0 in [{low:e}, {high:e}]")]
    NoBracket {
        low: f64,
        high: f64,
        scan: Vec<(f64, f64)>,
    },

    #[error("profile is not positive in the interior (min {min:e} at r = {at:e})")]
    PositivityViolation { min: f64, at: f64 },

    #[error("radial ODE blew up at r = {r:e}")]
    BlowUp { r: f64 },

    #[error("step size collapsed at r = {r:e}")]
    StepCollapse { r: f64 },

    #[error("no crossover J(t u0) <= 0 after {doublings} doublings")]
    NoCrossover { doublings: usize },

    #[error("mountain pass did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("path maximum drifted to an endpoint (index {index})")]
    PathCollapse { index: usize },
}
