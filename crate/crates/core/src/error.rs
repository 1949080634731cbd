use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DreError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shifted system is singular at shift {shift}")]
    SingularShift { shift: Complex64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("real Schur iteration did not converge within {0} sweeps")]
    SchurNoConvergence(usize),

    #[error("Lyapunov operator is singular (eigenvalue sum {0:.3e})")]
    SingularLyapunov(f64),

    #[error("pair (T, B) is not stabilizable")]
    NotStabilizable,

    #[error("constant term of the Riccati equation is indefinite (min eigenvalue {0:.3e})")]
    IndefiniteConstant(f64),

    #[error("Newton iteration stalled: residual {residual:.3e} after {iterations} iterations")]
    NewtonNoConvergence { iterations: usize, residual: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<DreError> },

    #[error("integration failed at step {step}: {source}")]
    Integration {
        step: usize,
        source: Box<DreError>,
        /// Solutions at the instants completed before the failure.
        partial: Vec<nalgebra::DMatrix<f64>>,
    },

    #[error("matrix exponential overflowed; split the time interval")]
    Overflow,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}; increase the node count")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("fixed-point iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    FixedPointNoConvergence { iterations: usize, residual: f64 },

    #[error("iterative solver did not converge: relative residual {0:.3e}")]
    IterativeNoConvergence(f64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DreError>;
