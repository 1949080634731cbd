use super::sparse::CsrMatrix;
use crate::error::{DreError, Result};

/// Zero-fill incomplete Cholesky factor `L` (row-compressed lower triangle).
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    /// Factors the lower triangle of a symmetric matrix. Breakdown is
    /// handled by a diagonal shift that grows until every pivot is positive.
    pub fn new(m: &CsrMatrix) -> Result<Self> {
        let n = m.nrows();
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut base = Vec::new();
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    indices.push(j);
                    base.push(v);
                }
            }
            if indices.last() != Some(&i) {
                return Err(DreError::NotPositiveDefinite { column: i, pivot: 0.0 });
            }
            indptr.push(indices.len());
        }
        let mut alpha = 0.0;
        for _ in 0..30 {
            let mut values = base.clone();
            if alpha > 0.0 {
                for i in 0..n {
                    let d = indptr[i + 1] - 1;
                    values[d] *= 1.0 + alpha;
                }
            }
            if Self::factor_in_place(n, &indptr, &indices, &mut values) {
                return Ok(Self { n, indptr, indices, values });
            }
            alpha = if alpha == 0.0 { 1e-3 } else { 2.0 * alpha };
        }
        Err(DreError::NotPositiveDefinite { column: 0, pivot: -1.0 })
    }

    fn factor_in_place(n: usize, indptr: &[usize], indices: &[usize], values: &mut [f64]) -> bool {
        for i in 0..n {
            let (ri0, ri1) = (indptr[i], indptr[i + 1]);
            for p in ri0..ri1 {
                let k = indices[p];
                // sparse dot of rows i and k restricted to columns < k
                let (mut a, mut b) = (ri0, indptr[k]);
                let bend = indptr[k + 1] - 1;
                let mut s = values[p];
                while a < p && b < bend {
                    let (ca, cb) = (indices[a], indices[b]);
                    if ca == cb {
                        s -= values[a] * values[b];
                        a += 1;
                        b += 1;
                    } else if ca < cb {
                        a += 1;
                    } else {
                        b += 1;
                    }
                }
                if k == i {
                    if !(s > 0.0) {
                        return false;
                    }
                    values[p] = s.sqrt();
                } else {
                    values[p] = s / values[indptr[k + 1] - 1];
                }
            }
        }
        true
    }

    /// `z = (L Lᵀ)⁻¹ r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for i in 0..self.n {
            let d = self.indptr[i + 1] - 1;
            let mut s = z[i];
            for p in self.indptr[i]..d {
                s -= self.values[p] * z[self.indices[p]];
            }
            z[i] = s / self.values[d];
        }
        for i in (0..self.n).rev() {
            let d = self.indptr[i + 1] - 1;
            z[i] /= self.values[d];
            let zi = z[i];
            for p in self.indptr[i]..d {
                z[self.indices[p]] -= self.values[p] * zi;
            }
        }
    }
}

/// Preconditioned conjugate gradients for an SPD `m`; `x` holds the initial guess.
/// Returns the number of iterations.
pub fn pcg(m: &CsrMatrix, pre: &IncompleteCholesky, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = b.to_vec();
    let mut ax = vec![0.0; n];
    matvec(m, x, &mut ax);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 0..max_iter {
        let rn = norm(&r);
        if rn <= tol * bnorm {
            return Ok(it);
        }
        matvec(m, &p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(DreError::NotPositiveDefinite { column: it, pivot: pq });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = norm(&r);
    if rn <= tol * bnorm {
        Ok(max_iter)
    } else {
        Err(DreError::IterativeNoConvergence(rn / bnorm))
    }
}

fn matvec(m: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        let (cols, vals) = m.row(i);
        *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
