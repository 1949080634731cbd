use std::sync::Arc;

use crate::error::{DreError, Result};
use crate::linalg::dense::{qr_thin, Mat};
use crate::linalg::operator::{LinearOperator, SparseOperator};
use crate::linalg::sparse::CsrMatrix;

/// `Ẋ = AᵀX + XA − XBBᵀX + CᵀC`, `X(0) = ZZᵀ`, on `[0, t_f]`.
#[derive(Clone)]
pub struct DreProblem {
    pub op: Arc<dyn LinearOperator>,
    /// n × s
    pub b: Mat,
    /// p × n
    pub c: Mat,
    /// n × q
    pub z: Mat,
    pub t_f: f64,
}

impl std::fmt::Debug for DreProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DreProblem")
            .field("n", &self.n())
            .field("s", &self.b.ncols())
            .field("p", &self.c.nrows())
            .field("q", &self.z.ncols())
            .field("t_f", &self.t_f)
            .finish()
    }
}

impl DreProblem {
    pub fn new(op: Arc<dyn LinearOperator>, b: Mat, c: Mat, z: Mat, t_f: f64) -> Result<Self> {
        let n = op.dim();
        if b.nrows() != n || c.ncols() != n || z.nrows() != n {
            return Err(DreError::Dimension(format!(
                "A is {n}x{n} but B is {:?}, C is {:?}, Z is {:?}",
                b.shape(),
                c.shape(),
                z.shape()
            )));
        }
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(DreError::InvalidArgument(format!("horizon must be positive, got {t_f}")));
        }
        for (name, m) in [("B", &b), ("C", &c.transpose()), ("Z", &z)] {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(DreError::NonFinite(match name {
                    "B" => "B",
                    "C" => "C",
                    _ => "Z",
                }));
            }
            if m.ncols() > 0 && m.norm() > 0.0 && qr_thin(m).rank() < m.ncols() {
                log::warn!("{name} is rank deficient");
            }
        }
        Ok(Self { op, b, c, z, t_f })
    }

    /// Convenience constructor from an explicit sparse `A`.
    pub fn from_sparse(a: CsrMatrix, b: Mat, c: Mat, z: Mat, t_f: f64) -> Result<Self> {
        Self::new(Arc::new(SparseOperator::new(a)?), b, c, z, t_f)
    }

    pub fn n(&self) -> usize {
        self.op.dim()
    }

    pub fn x0(&self) -> Mat {
        &self.z * self.z.transpose()
    }
}
