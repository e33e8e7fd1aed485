use thiserror::Error;

/// Errors raised by model construction and dynamics evaluation.
#[derive(Debug, Error)]
pub enum RbdError {
    #[error("model has no bodies")]
    EmptyModel,
    #[error("body {0}: parent index {1} is not topologically earlier")]
    BadParent(usize, usize),
    #[error("model must have at most one floating base, found {0}")]
    MultipleFloatingBases(usize),
    #[error("floating joint allowed only at a root body (body {0})")]
    FloatingNotRoot(usize),
    #[error("body {0} ({1}): negative mass {2}")]
    NegativeMass(usize, String, f64),
    #[error("total model mass must be positive")]
    ZeroTotalMass,
    #[error("body {0} ({1}): inertia tensor not symmetric positive semi-definite")]
    BadInertia(usize, String),
    #[error("joint {0} ({1}): axis must have unit norm")]
    BadAxis(usize, String),
    #[error("contact {0} ({1}): body index {2} out of range")]
    BadContactBody(usize, String, usize),
    #[error("unknown contact id {0}")]
    UnknownContact(usize),
    #[error("dimension mismatch: expected {expected} {what}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("step size must be positive, got {0}")]
    BadStepSize(f64),
    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),
    #[error("mass matrix not positive definite")]
    SingularMassMatrix,
    #[error("model JSON: {0}")]
    Json(String),
}
