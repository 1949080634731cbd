use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::ordering::invert;
use super::sparse::CsrMatrix;
use crate::error::{DreError, Result};

const NONE: usize = usize::MAX;

/// Field type for sparse factorizations.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Compressed sparse column storage.
#[derive(Debug, Clone)]
pub struct CscMat<T> {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Scalar> CscMat<T> {
    /// `A - shift·E` (E defaults to the identity) in column-compressed form.
    pub fn shifted(a: &CsrMatrix, e: Option<&CsrMatrix>, shift: T, map: impl Fn(f64) -> T) -> Self {
        let n = a.nrows();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, v) in a.triplets() {
            cols[j].push((i, map(v)));
        }
        match e {
            Some(e) => {
                for (i, j, v) in e.triplets() {
                    cols[j].push((i, -(shift * map(v))));
                }
            }
            None => {
                for (j, col) in cols.iter_mut().enumerate() {
                    col.push((j, -shift));
                }
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::new();
        let mut vals = Vec::new();
        colptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|x| x.0);
            for &(i, v) in col.iter() {
                if rowind.len() > *colptr.last().unwrap() && *rowind.last().unwrap() == i {
                    *vals.last_mut().unwrap() += v;
                } else {
                    rowind.push(i);
                    vals.push(v);
                }
            }
            colptr.push(rowind.len());
        }
        Self { n, colptr, rowind, vals }
    }

    fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }
}

/// Sparse LU with threshold partial pivoting, `P A Q = L U`.
///
/// Left-looking; each column is a sparse triangular solve whose nonzero
/// pattern comes from a depth-first reach in the graph of `L`.
#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<T>,
    pinv: Vec<usize>,
    q: Vec<usize>,
}

impl<T: Scalar> SparseLu<T> {
    /// Factors `a` with column order `q`. A pivot of relative size below
    /// `1e-14` is reported as singular (`Err(column)`).
    pub fn factor(a: &CscMat<T>, q: &[usize], pivot_tol: f64) -> std::result::Result<Self, usize> {
        let n = a.n;
        let anorm = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let cap = 4 * a.vals.len() + n;
        let (mut li, mut lx) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        let (mut ui, mut ux) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        lp.push(0);
        up.push(0);
        let mut pinv = vec![NONE; n];
        let mut x = vec![T::zero(); n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut marked = vec![false; n];
        for k in 0..n {
            let col = q[k];
            let top = reach(&lp, &li, a, col, &pinv, &mut xi, &mut stack, &mut pstack, &mut marked);
            for &i in &xi[top..] {
                x[i] = T::zero();
            }
            for p in a.colptr[col]..a.colptr[col + 1] {
                x[a.rowind[p]] = a.vals[p];
            }
            for px in top..n {
                let j = xi[px];
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                for p in lp[jj] + 1..lp[jj + 1] {
                    let r = li[p];
                    x[r] -= lx[p] * xj;
                }
            }
            let mut ipiv = NONE;
            let mut amax = -1.0;
            for &i in &xi[top..] {
                if pinv[i] == NONE {
                    let t = x[i].modulus();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= 1e-14 * anorm {
                return Err(k);
            }
            if pinv[col] == NONE && x[col].modulus() >= pivot_tol * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            up.push(ui.len());
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(T::one());
            for &i in &xi[top..] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
            lp.push(li.len());
        }
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { n, lp, li, lx, up, ui, ux, pinv, q: q.to_vec() })
    }

    pub fn nnz(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T], work: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            work[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = work[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                let r = self.li[p];
                work[r] -= self.lx[p] * xj;
            }
        }
        for j in (0..n).rev() {
            let d = self.up[j + 1] - 1;
            work[j] = work[j] / self.ux[d];
            let xj = work[j];
            for p in self.up[j]..d {
                let r = self.ui[p];
                work[r] -= self.ux[p] * xj;
            }
        }
        for k in 0..n {
            b[self.q[k]] = work[k];
        }
    }

    /// Solves `Aᵀ x = b` in place (plain transpose, no conjugation).
    pub fn solve_transpose_in_place(&self, b: &mut [T], work: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            work[k] = b[self.q[k]];
        }
        for j in 0..n {
            let d = self.up[j + 1] - 1;
            let mut s = work[j];
            for p in self.up[j]..d {
                s -= self.ux[p] * work[self.ui[p]];
            }
            work[j] = s / self.ux[d];
        }
        for j in (0..n).rev() {
            let mut s = work[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * work[self.li[p]];
            }
            work[j] = s;
        }
        for i in 0..n {
            b[i] = work[self.pinv[i]];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn reach<T>(
    lp: &[usize],
    li: &[usize],
    a: &CscMat<T>,
    col: usize,
    pinv: &[usize],
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    marked: &mut [bool],
) -> usize {
    let n = a.n;
    let mut top = n;
    for p in a.colptr[col]..a.colptr[col + 1] {
        let start = a.rowind[p];
        if marked[start] {
            continue;
        }
        // iterative depth-first search from `start`
        let mut head = 0usize;
        stack[0] = start;
        loop {
            let j = stack[head];
            let jn = pinv[j];
            if !marked[j] {
                marked[j] = true;
                pstack[head] = if jn == NONE { 0 } else { lp[jn] + 1 };
            }
            let end = if jn == NONE { 0 } else { lp[jn + 1] };
            let mut done = true;
            let mut q = pstack[head];
            while q < end {
                let i = li[q];
                q += 1;
                if marked[i] {
                    continue;
                }
                pstack[head] = q;
                head += 1;
                stack[head] = i;
                done = false;
                break;
            }
            if done {
                top -= 1;
                xi[top] = j;
                if head == 0 {
                    break;
                }
                head -= 1;
            }
        }
    }
    for &i in &xi[top..] {
        marked[i] = false;
    }
    top
}

/// Sparse Cholesky `P A Pᵀ = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    perm: Vec<usize>,
    pinv: Vec<usize>,
}

impl SparseCholesky {
    /// Up-looking factorization; only the structurally symmetric part of `a` is read
    /// (entries with permuted row ≤ permuted column).
    pub fn factor(a: &CsrMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(DreError::Dimension("Cholesky needs a square matrix".into()));
        }
        let pinv = invert(perm);
        // column k of C = P A Pᵀ, upper part
        let mut ccols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                ccols[pj].push((pi, v));
            }
        }
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &(i0, _) in &ccols[k] {
                let mut i = i0;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut x = vec![0.0; n];
        let mut flag = vec![NONE; n];
        let mut s = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for &(i0, v) in &ccols[k] {
                x[i0] += v;
                let mut i = i0;
                let mut len = 0;
                while flag[i] != k {
                    s[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    // paths are copied onto the top of the stack
                    s.swap(top, len);
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for idx in top..n {
                let i = s[idx];
                let lki = x[i] / cols[i][0].1;
                x[i] = 0.0;
                for &(r, v) in &cols[i][1..] {
                    x[r] -= v * lki;
                }
                d -= lki * lki;
                cols[i].push((k, lki));
            }
            if !(d > 0.0) {
                return Err(DreError::NotPositiveDefinite { column: k, pivot: d });
            }
            cols.push(vec![(k, d.sqrt())]);
        }
        let mut lp = Vec::with_capacity(n + 1);
        let mut li = Vec::new();
        let mut lx = Vec::new();
        lp.push(0);
        for c in cols {
            for (r, v) in c {
                li.push(r);
                lx.push(v);
            }
            lp.push(li.len());
        }
        Ok(Self { n, lp, li, lx, perm: perm.to_vec(), pinv })
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    /// Diagonal entry `L[j, j]` (permuted numbering).
    pub fn diag(&self, j: usize) -> f64 {
        self.lx[self.lp[j]]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `x ← L⁻¹ x` (permuted numbering).
    pub fn l_solve(&self, x: &mut [f64]) {
        for j in 0..self.n {
            x[j] /= self.lx[self.lp[j]];
            let xj = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
    }

    /// `x ← L⁻ᵀ x` (permuted numbering).
    pub fn lt_solve(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s / self.lx[self.lp[j]];
        }
    }

    /// `x ← L x` (permuted numbering).
    pub fn l_mul(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let xj = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                x[self.li[p]] += self.lx[p] * xj;
            }
            x[j] = xj * self.lx[self.lp[j]];
        }
    }

    /// `x ← Lᵀ x` (permuted numbering).
    pub fn lt_mul(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let mut s = x[j] * self.lx[self.lp[j]];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s += self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
    }

    /// `y[pinv[i]] = x[i]`.
    pub fn permute(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[self.pinv[i]] = x[i];
        }
    }

    /// Inverse of [`Self::permute`].
    pub fn unpermute(&self, y: &[f64], x: &mut [f64]) {
        for i in 0..self.n {
            x[i] = y[self.pinv[i]];
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        self.permute(b, work);
        self.l_solve(work);
        self.lt_solve(work);
        self.unpermute(work, b);
    }
}
