use super::dense::Mat;
use crate::error::{DreError, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(DreError::Dimension(format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let p = next[i];
            cols[p] = j;
            vals[p] = v;
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|e| e.0);
            for &(j, v) in row.iter() {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            // cancellation may leave exact zeros behind
            let mut keep = indptr[i];
            for p in indptr[i]..indices.len() {
                if values[p] != 0.0 {
                    indices[keep] = indices[p];
                    values[keep] = values[p];
                    keep += 1;
                }
            }
            indices.truncate(keep);
            values.truncate(keep);
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &Mat) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p]))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha·self + beta·other`.
    pub fn axpby(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(DreError::Dimension("axpby operands differ in shape".into()));
        }
        let mut t: Vec<_> = self.triplets().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact symmetry test (pattern and values).
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `self · x` for a dense block `x`.
    pub fn mul_dense(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.ncols, "sparse product shape mismatch");
        let k = x.ncols();
        let mut out = Mat::zeros(self.nrows, k);
        let xs = x.as_slice();
        let n = self.ncols;
        for c in 0..k {
            let xc = &xs[c * n..(c + 1) * n];
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let mut s = 0.0;
                for p in self.indptr[i]..self.indptr[i + 1] {
                    s += self.values[p] * xc[self.indices[p]];
                }
                oc[i] = s;
            }
        }
        out
    }

    /// `selfᵀ · x` without forming the transpose.
    pub fn tr_mul_dense(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.nrows, "sparse product shape mismatch");
        let k = x.ncols();
        let mut out = Mat::zeros(self.ncols, k);
        for c in 0..k {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let xi = xc[i];
                if xi == 0.0 {
                    continue;
                }
                for p in self.indptr[i]..self.indptr[i + 1] {
                    oc[self.indices[p]] += self.values[p] * xi;
                }
            }
        }
        out
    }

    /// Symmetric adjacency lists of the pattern of `self + selfᵀ`, diagonal excluded.
    pub fn symmetric_pattern(&self) -> Vec<Vec<usize>> {
        let n = self.nrows;
        let mut adj = vec![Vec::new(); n];
        for (i, j, _) in self.triplets() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}
