pub mod dense;
pub mod expm;
pub mod factor;
pub mod operator;
pub mod ordering;
pub mod pcg;
pub mod schur;
pub mod shifted;
pub mod sparse;
pub mod truncate;

pub use dense::{block_orthogonalize, qr_thin, CMat, Mat, Orthogonalized, ThinQr};
pub use expm::expm;
pub use operator::{LinearOperator, MassTransformOperator, SparseOperator};
pub use schur::{real_schur, RealSchur};
pub use shifted::{solve_shifted, Factorization, ShiftedSolver, SolverBackend};
pub use sparse::CsrMatrix;
pub use truncate::{sym_truncate, RANK_TOL};
