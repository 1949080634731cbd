use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{split_complex, CMat, Mat};
use super::factor::SparseCholesky;
use super::ordering::minimum_degree;
use super::shifted::{ShiftedSolver, SolverBackend};
use super::sparse::CsrMatrix;
use crate::error::{DreError, Result};

const EXACT_NORM_LIMIT: usize = 400;
const NORM_PROBES: usize = 32;

/// A square real operator `A` with products and shifted solves.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    /// `A X`.
    fn apply(&self, x: &Mat) -> Mat;
    /// `Aᵀ X`.
    fn apply_transpose(&self, x: &Mat) -> Mat;
    /// `(A - sI)⁻¹ R`, or `(Aᵀ - sI)⁻¹ R` when `transpose` is set.
    fn solve_shifted(&self, shift: Complex64, rhs: &CMat, transpose: bool) -> Result<CMat>;
    fn solve_shifted_real(&self, shift: f64, rhs: &Mat, transpose: bool) -> Result<Mat>;
    fn is_symmetric(&self) -> bool;
    fn frobenius_norm(&self) -> f64;

    fn to_dense(&self) -> Mat {
        self.apply(&Mat::identity(self.dim(), self.dim()))
    }
}

/// `A` stored explicitly as a sparse matrix.
#[derive(Debug)]
pub struct SparseOperator {
    solver: ShiftedSolver,
    norm: f64,
}

impl SparseOperator {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        Self::with_backend(a, SolverBackend::Direct)
    }

    pub fn with_backend(a: CsrMatrix, backend: SolverBackend) -> Result<Self> {
        let norm = a.frobenius_norm();
        Ok(Self { solver: ShiftedSolver::new(a, None, backend)?, norm })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        self.solver.matrix()
    }

    pub fn solver(&self) -> &ShiftedSolver {
        &self.solver
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    fn apply(&self, x: &Mat) -> Mat {
        self.matrix().mul_dense(x)
    }

    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.matrix().tr_mul_dense(x)
    }

    fn solve_shifted(&self, shift: Complex64, rhs: &CMat, transpose: bool) -> Result<CMat> {
        self.solver.solve_complex(shift, rhs, transpose)
    }

    fn solve_shifted_real(&self, shift: f64, rhs: &Mat, transpose: bool) -> Result<Mat> {
        self.solver.solve_real(shift, rhs, transpose)
    }

    fn is_symmetric(&self) -> bool {
        self.solver.is_symmetric()
    }

    fn frobenius_norm(&self) -> f64 {
        self.norm
    }

    fn to_dense(&self) -> Mat {
        self.matrix().to_dense()
    }
}

/// `A = E_L⁻¹ Â E_L⁻ᵀ` with `Ê = E_L E_Lᵀ`, applied through triangular solves
/// and never formed.
#[derive(Debug)]
pub struct MassTransformOperator {
    a_hat: CsrMatrix,
    chol: SparseCholesky,
    solver: ShiftedSolver,
    norm: f64,
}

impl MassTransformOperator {
    pub fn new(a_hat: CsrMatrix, e_hat: CsrMatrix) -> Result<Self> {
        Self::with_backend(a_hat, e_hat, SolverBackend::Direct)
    }

    pub fn with_backend(a_hat: CsrMatrix, e_hat: CsrMatrix, backend: SolverBackend) -> Result<Self> {
        let n = a_hat.nrows();
        if a_hat.ncols() != n || e_hat.nrows() != n || e_hat.ncols() != n {
            return Err(DreError::Dimension("A and E must be square of equal size".into()));
        }
        if !e_hat.is_symmetric() {
            return Err(DreError::NotSymmetric(f64::NAN));
        }
        let perm = minimum_degree(&e_hat.symmetric_pattern());
        let chol = SparseCholesky::factor(&e_hat, &perm)?;
        let solver = ShiftedSolver::new(a_hat.clone(), Some(e_hat), backend)?;
        let mut op = Self { a_hat, chol, solver, norm: 0.0 };
        op.norm = op.estimate_norm();
        Ok(op)
    }

    fn estimate_norm(&self) -> f64 {
        let n = self.dim();
        if n <= EXACT_NORM_LIMIT {
            return self.to_dense().norm();
        }
        // Hutchinson: E‖A x‖² = ‖A‖_F² for Rademacher x
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let x = Mat::from_fn(n, NORM_PROBES, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 });
        let ax = self.apply(&x);
        (ax.norm_squared() / NORM_PROBES as f64).sqrt()
    }

    /// `E_L⁻¹ X`.
    pub fn lower_solve(&self, x: &Mat) -> Mat {
        self.map_columns(x, |c, v, w| {
            c.permute(v, w);
            c.l_solve(w);
            v.copy_from_slice(w);
        })
    }

    /// `E_L⁻ᵀ X`.
    pub fn lower_transpose_solve(&self, x: &Mat) -> Mat {
        self.map_columns(x, |c, v, w| {
            w.copy_from_slice(v);
            c.lt_solve(w);
            c.unpermute(w, v);
        })
    }

    /// `E_L X`.
    pub fn lower_mul(&self, x: &Mat) -> Mat {
        self.map_columns(x, |c, v, w| {
            w.copy_from_slice(v);
            c.l_mul(w);
            c.unpermute(w, v);
        })
    }

    /// `E_Lᵀ X`.
    pub fn lower_transpose_mul(&self, x: &Mat) -> Mat {
        self.map_columns(x, |c, v, w| {
            c.permute(v, w);
            c.lt_mul(w);
            v.copy_from_slice(w);
        })
    }

    fn map_columns(&self, x: &Mat, f: impl Fn(&SparseCholesky, &mut [f64], &mut [f64])) -> Mat {
        let mut out = x.clone();
        let mut w = vec![0.0; x.nrows()];
        for mut col in out.column_iter_mut() {
            f(&self.chol, col.as_mut_slice(), &mut w);
        }
        out
    }

    /// Transformed input and output matrices: `B = E_L⁻¹ B̂`, `C = Ĉ E_L⁻ᵀ`, `Z = E_Lᵀ Ẑ`.
    pub fn transform_inputs(&self, b_hat: &Mat, c_hat: &Mat, z_hat: &Mat) -> (Mat, Mat, Mat) {
        let b = self.lower_solve(b_hat);
        let c = self.lower_solve(&c_hat.transpose()).transpose();
        let z = self.lower_transpose_mul(z_hat);
        (b, c, z)
    }
}

impl LinearOperator for MassTransformOperator {
    fn dim(&self) -> usize {
        self.a_hat.nrows()
    }

    fn apply(&self, x: &Mat) -> Mat {
        self.lower_solve(&self.a_hat.mul_dense(&self.lower_transpose_solve(x)))
    }

    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.lower_solve(&self.a_hat.tr_mul_dense(&self.lower_transpose_solve(x)))
    }

    fn solve_shifted(&self, shift: Complex64, rhs: &CMat, transpose: bool) -> Result<CMat> {
        let (re, im) = split_complex(rhs);
        let (re, im) = (self.lower_mul(&re), self.lower_mul(&im));
        let y = self.solver.solve_complex(shift, &combine(&re, &im), transpose)?;
        let (yr, yi) = split_complex(&y);
        Ok(combine(&self.lower_transpose_mul(&yr), &self.lower_transpose_mul(&yi)))
    }

    fn solve_shifted_real(&self, shift: f64, rhs: &Mat, transpose: bool) -> Result<Mat> {
        let y = self.solver.solve_real(shift, &self.lower_mul(rhs), transpose)?;
        Ok(self.lower_transpose_mul(&y))
    }

    fn is_symmetric(&self) -> bool {
        self.a_hat.is_symmetric()
    }

    fn frobenius_norm(&self) -> f64 {
        self.norm
    }
}

fn combine(re: &Mat, im: &Mat) -> CMat {
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}
