use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate cluster: {0}")]
    DegenerateCluster(String),

    #[error("under-determined: {0}")]
    Underdetermined(String),

    #[error("inconsistent normals: cycle defect {defect:e}")]
    Inconsistent { defect: f64 },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("optimizer infeasible after {outer_iterations} outer iterations (best measure error {best_measure_error:e})")]
    Infeasible {
        outer_iterations: usize,
        best_measure_error: f64,
        best: Box<crate::optimizer::OptResult>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
