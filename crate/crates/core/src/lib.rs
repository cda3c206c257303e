//! Sparse bilinear Hanson-Wright tail bounds, cross-covariance estimators
//! under missing data and bounded multiplicative measurement error, and the
//! Monte Carlo machinery that checks them.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod norms;
pub mod simulation;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use norms::{CoefficientMatrix, MaskMoments};
