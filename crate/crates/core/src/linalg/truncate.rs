use nalgebra::SymmetricEigen;

use super::dense::Mat;
use crate::error::{DreError, Result};

/// Default relative eigenvalue cutoff for low-rank factors.
pub const RANK_TOL: f64 = 1e-8;

/// Low-rank factor `Ŷ` of a symmetric PSD matrix with `Y ≈ Ŷ Ŷᵀ`.
///
/// Eigenvalues below `tol · λ_max` are discarded, small negative ones included.
/// Columns are ordered by decreasing eigenvalue.
pub fn sym_truncate(y: &Mat, tol: f64) -> Result<Mat> {
    let d = y.nrows();
    if y.ncols() != d {
        return Err(DreError::Dimension(format!("sym_truncate needs a square matrix, got {}x{}", d, y.ncols())));
    }
    if d == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let scale = y.norm();
    let asym = (y - y.transpose()).norm();
    if asym > 1e-10 * scale {
        return Err(DreError::NotSymmetric(asym / scale));
    }
    let eig = SymmetricEigen::new(super::dense::symmetrize(y));
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return Ok(Mat::zeros(d, 0));
    }
    let mut keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > tol * lmax).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = Mat::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        out.set_column(c, &(eig.eigenvectors.column(i) * s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_tiny_eigenvalue() {
        let q = super::super::dense::qr_thin(&Mat::from_fn(3, 3, |i, j| ((i + 2 * j) % 3) as f64 + if i == j { 1.0 } else { 0.0 })).q;
        let lam = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-3, 1e-12]));
        let y = &q * lam * q.transpose();
        let f = sym_truncate(&y, 1e-8).unwrap();
        assert_eq!(f.ncols(), 2);
    }

    #[test]
    fn rejects_asymmetric() {
        let y = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sym_truncate(&y, 1e-8), Err(DreError::NotSymmetric(_))));
    }

    #[test]
    fn zero_matrix_gives_empty_factor() {
        let f = sym_truncate(&Mat::zeros(4, 4), 1e-8).unwrap();
        assert_eq!(f.shape(), (4, 0));
    }
}
