use crate::linalg3::Vec3;

/// Errors produced by the integrators, potentials and diagnostics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("potential is singular at x = {x}")]
    SingularPoint { x: Vec3 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported Gauss-Legendre order {0} (supported: 1..=16)")]
    UnsupportedOrder(usize),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    FixedPointDiverged { iterations: usize, residual: f64 },

    #[error("reference step does not resolve the gyration: h*|B|/eps = {gyration} > {limit}")]
    ResolutionError { gyration: f64, limit: f64 },

    #[error("magnetic moment is undefined for a zero magnetic field")]
    ZeroField,

    #[error("drift window holds {found} samples, at least {required} are required")]
    EmptyWindow { found: usize, required: usize },

    #[error("step {step} (t = {t}) failed: {source}")]
    StepFailed {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
