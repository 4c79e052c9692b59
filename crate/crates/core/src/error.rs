use thiserror::Error;

use crate::contracts::Violations;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid contract: {0}")]
    Validation(Violations),
    #[error("domain error: {0}")]
    Domain(String),
    /// The high-order weight needs `dtau / dx^2 >= 1/6`.
    #[error("mesh is inadmissible for the high-order scheme: beta = {beta:.6} < 1/6")]
    Inadmissible { beta: f64 },
    #[error("tridiagonal pivot {pivot:e} at row {row} is below the singularity threshold")]
    Singular { row: usize, pivot: f64 },
    #[error("grid geometry error: {0}")]
    Geometry(String),
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("explicit scheme is unstable: {0}")]
    Unstable(String),
    #[error("x0 = {x0} lies outside the grid [{lo}, {hi}]")]
    Extrapolation { x0: f64, lo: f64, hi: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<Violations> for PricingError {
    fn from(v: Violations) -> Self {
        PricingError::Validation(v)
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;
