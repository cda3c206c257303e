use thiserror::Error;

/// Errors raised by the norm, bound, estimator and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid {name} = {value}: must be {constraint}")]
    InvalidParameter {
        name: String,
        value: f64,
        constraint: &'static str,
    },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NonConvergence {
        iterations: usize,
        last_estimate: f64,
        last_vector: Vec<f64>,
    },

    #[error("coefficient matrix does not have {expected} structure: {detail}")]
    StructureMismatch {
        expected: &'static str,
        detail: String,
    },

    #[error("joint probability at ({row}, {col}) = {joint} violates the Frechet bounds [{lower}, {upper}]")]
    FrechetViolation {
        row: usize,
        col: usize,
        joint: f64,
        lower: f64,
        upper: f64,
    },

    #[error("joint probability table is not representable by the shared-latent mask generator at ({row}, {col}): {detail}")]
    UnrepresentableJoint {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("covariance is not positive semidefinite: leading minor of order {minor} fails (pivot {pivot})")]
    NotPositiveSemidefinite { minor: usize, pivot: f64 },

    #[error("sample-size condition is degenerate: {0}")]
    DegenerateCondition(String),

    #[error("infeasible measurement-error moments at index {index}: {detail}")]
    InfeasibleErrorMoments { index: usize, detail: String },

    #[error("null set is empty, family-wise error rate is undefined")]
    EmptyNullSet,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

pub(crate) fn invalid(name: impl Into<String>, value: f64, constraint: &'static str) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        value,
        constraint,
    }
}

/// Requires `value` to lie in the half-open interval (0, 1].
pub(crate) fn check_probability(name: impl Into<String>, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(invalid(name, value, "in (0, 1]"))
    }
}

pub(crate) fn check_positive(name: impl Into<String>, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, value, "finite and strictly positive"))
    }
}
