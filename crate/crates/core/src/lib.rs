//! Low-rank solvers for large differential Riccati equations
//! `Ẋ = AᵀX + XA − XBBᵀX + CᵀC`, `X(0) = ZZᵀ`, by projection onto extended or
//! rational Krylov subspaces.

pub mod are;
pub mod bdf;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod projection;
pub mod reference;

pub use are::{solve_care, solve_care_with, solve_lyapunov, CareOptions, CareProblem, CareSolution};
pub use bdf::{bdf_integrate, BdfScheme, ReducedTrajectory};
pub use error::{DreError, Result};
pub use krylov::{BasisKind, BasisState};
pub use linalg::{CsrMatrix, LinearOperator, Mat, MassTransformOperator, SolverBackend, SparseOperator};
pub use problem::DreProblem;
pub use problems::{ProblemKind, ProblemRecipe};
pub use projection::{
    backward_error, feedback_gain, residual_estimate, residual_quadrature, solve_dre, solve_dre_observed, steady_state, FeedbackGain, IterationRecord, IterationView, ResidualEstimate,
    SolveResult, SolverConfig,
};
