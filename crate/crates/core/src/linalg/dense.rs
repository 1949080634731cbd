use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Columns whose norm falls below this fraction of the reference scale are dropped.
pub const DROP_TOL: f64 = 1e-12;

/// Thin QR factorization `M ≈ Q R` with `Q` orthonormal (n × rank) and `R` rank × ncols.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Mat,
    pub r: Mat,
}

impl ThinQr {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }
}

/// Thin QR with rank-revealing column drop at `1e-12 · ‖M‖_F`.
pub fn qr_thin(m: &Mat) -> ThinQr {
    qr_thin_tol(m, DROP_TOL)
}

pub fn qr_thin_tol(m: &Mat, rel_tol: f64) -> ThinQr {
    let (n, c) = m.shape();
    let thresh = rel_tol * m.norm();
    let mut q = Mat::zeros(n, c);
    let mut r = Mat::zeros(c, c);
    let mut rank = 0;
    for j in 0..c {
        let mut v = m.column(j).clone_owned();
        // modified Gram-Schmidt, two passes
        for _ in 0..2 {
            for i in 0..rank {
                let d = q.column(i).dot(&v);
                v.axpy(-d, &q.column(i), 1.0);
                r[(i, j)] += d;
            }
        }
        let nrm = v.norm();
        if nrm > thresh && nrm > 0.0 {
            q.set_column(rank, &(v / nrm));
            r[(rank, j)] = nrm;
            rank += 1;
        }
    }
    ThinQr {
        q: q.columns(0, rank).into_owned(),
        r: r.rows(0, rank).into_owned(),
    }
}

/// Result of orthogonalizing a block `W` against an orthonormal basis `V`:
/// `W = V·h + q·r`.
#[derive(Debug, Clone)]
pub struct Orthogonalized {
    pub q: Mat,
    pub h: Mat,
    pub r: Mat,
    /// True when the whole block vanished against `V`.
    pub stagnated: bool,
}

impl Orthogonalized {
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }
}

/// Block Gram-Schmidt of `w` against the orthonormal columns of `v`, two passes,
/// followed by an in-block QR. A column is dropped when what is left of it is
/// below `1e-12` of its original norm.
pub fn block_orthogonalize(v: &Mat, w: &Mat) -> Orthogonalized {
    block_orthogonalize_tol(v, w, DROP_TOL)
}

pub fn block_orthogonalize_tol(v: &Mat, w: &Mat, rel_tol: f64) -> Orthogonalized {
    let (n, k) = w.shape();
    assert_eq!(v.nrows(), n, "basis and block row counts differ");
    let dim = v.ncols();
    let orig: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    let mut work = w.clone();
    let mut h = Mat::zeros(dim, k);
    let chunk = k.max(1);
    for _ in 0..2 {
        let mut start = 0;
        while start < dim {
            let width = chunk.min(dim - start);
            let vb = v.columns(start, width);
            let hb = vb.tr_mul(&work);
            work.gemm(-1.0, &vb, &hb, 1.0);
            let mut hv = h.rows_mut(start, width);
            hv += &hb;
            start += width;
        }
    }
    let mut q = Mat::zeros(n, k);
    let mut r = Mat::zeros(k, k);
    let mut rank = 0;
    for j in 0..k {
        let mut col = work.column(j).clone_owned();
        for _ in 0..2 {
            for i in 0..rank {
                let d = q.column(i).dot(&col);
                col.axpy(-d, &q.column(i), 1.0);
                r[(i, j)] += d;
            }
        }
        let nrm = col.norm();
        if nrm > rel_tol * orig[j] && nrm > 0.0 {
            q.set_column(rank, &(col / nrm));
            r[(rank, j)] = nrm;
            rank += 1;
        }
    }
    Orthogonalized {
        q: q.columns(0, rank).into_owned(),
        h,
        r: r.rows(0, rank).into_owned(),
        stagnated: rank == 0,
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn hcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn vcat(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// Real and imaginary parts of a complex matrix.
pub fn split_complex(m: &CMat) -> (Mat, Mat) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_example_drops_column() {
        let m = Mat::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let f = qr_thin(&m);
        assert_eq!(f.rank(), 1);
        let back = &f.q * &f.r;
        assert!((back - m).norm() < 1e-14);
    }

    #[test]
    fn block_orthogonalize_detects_span() {
        let v = qr_thin(&Mat::from_fn(20, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * j as f64)).q;
        let w = &v * Mat::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0]);
        let o = block_orthogonalize(&v, &w);
        assert!(o.stagnated);
        assert_eq!(o.rank(), 0);
    }

    #[test]
    fn block_orthogonalize_reconstructs() {
        let v = qr_thin(&Mat::from_fn(30, 4, |i, j| ((i * i + 3 * j) % 11) as f64)).q;
        let w = Mat::from_fn(30, 3, |i, j| ((2 * i + j * j) % 7) as f64 - 3.0);
        let o = block_orthogonalize(&v, &w);
        let back = &v * &o.h + &o.q * &o.r;
        assert!((back - &w).norm() < 1e-12 * w.norm());
        assert!((v.tr_mul(&o.q)).norm() < 1e-13);
        let gram = o.q.tr_mul(&o.q);
        assert!((gram - Mat::identity(o.rank(), o.rank())).norm() < 1e-13);
    }
}
