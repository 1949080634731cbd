use std::collections::VecDeque;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use super::dense::{CMat, Mat};
use super::factor::{CscMat, SparseCholesky, SparseLu};
use super::ordering::minimum_degree;
use super::pcg::{pcg, IncompleteCholesky};
use super::sparse::CsrMatrix;
use crate::error::{DreError, Result};

const CACHE_CAPACITY: usize = 8;
const PIVOT_THRESHOLD: f64 = 0.1;
const PCG_TOL: f64 = 1e-10;

/// How shifted systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverBackend {
    #[default]
    Direct,
    /// Conjugate gradients with an IC(0) preconditioner. Used only when the
    /// shifted matrix is symmetric and the shift is real; other systems fall
    /// back to the direct path.
    Pcg,
}

/// A factored shifted matrix `A - s·E`.
#[derive(Debug)]
pub enum Factorization {
    /// Cholesky of `s·E - A` (the negated system), valid when that is SPD.
    NegCholesky(SparseCholesky),
    RealLu(SparseLu<f64>),
    ComplexLu(SparseLu<Complex64>),
    /// IC(0)-preconditioned CG on `s·E - A`.
    Iterative { m: CsrMatrix, pre: IncompleteCholesky },
}

impl Factorization {
    pub fn kind(&self) -> &'static str {
        match self {
            Factorization::NegCholesky(_) => "cholesky",
            Factorization::RealLu(_) | Factorization::ComplexLu(_) => "lu",
            Factorization::Iterative { .. } => "pcg",
        }
    }
}

type Key = (u64, u64);

/// Solves `(A - s·E) X = R` (or the transposed system) with cached factorizations.
///
/// The fill-reducing ordering is computed once. Factorizations are keyed
/// by the exact bit pattern of the shift; the cache is shared behind a
/// read-write lock and evicts the oldest entry when full.
#[derive(Debug)]
pub struct ShiftedSolver {
    a: CsrMatrix,
    e: Option<CsrMatrix>,
    symmetric: bool,
    backend: SolverBackend,
    order: OnceLock<Vec<usize>>,
    cache: RwLock<VecDeque<(Key, Arc<Factorization>)>>,
    scale: f64,
}

impl ShiftedSolver {
    pub fn new(a: CsrMatrix, e: Option<CsrMatrix>, backend: SolverBackend) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(DreError::Dimension("shifted solves need a square matrix".into()));
        }
        if let Some(e) = &e {
            if e.nrows() != a.nrows() || e.ncols() != a.ncols() {
                return Err(DreError::Dimension("mass matrix shape differs from A".into()));
            }
        }
        let symmetric = a.is_symmetric() && e.as_ref().map_or(true, |e| e.is_symmetric());
        let scale = a.max_abs().max(e.as_ref().map_or(1.0, |e| e.max_abs()));
        Ok(Self { a, e, symmetric, backend, order: OnceLock::new(), cache: RwLock::new(VecDeque::new()), scale })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn mass(&self) -> Option<&CsrMatrix> {
        self.e.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn cached_shifts(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    fn order(&self) -> &[usize] {
        self.order.get_or_init(|| minimum_degree(&self.a.symmetric_pattern()))
    }

    /// Returns the factorization for `shift`, computing and caching it if needed.
    pub fn factorization(&self, shift: Complex64) -> Result<Arc<Factorization>> {
        let key = (shift.re.to_bits(), shift.im.to_bits());
        if let Some(f) = self.cache.read().expect("cache lock").iter().find(|(k, _)| *k == key) {
            return Ok(f.1.clone());
        }
        let f = Arc::new(self.factor(shift)?);
        let mut cache = self.cache.write().expect("cache lock");
        if let Some(existing) = cache.iter().find(|(k, _)| *k == key) {
            return Ok(existing.1.clone());
        }
        if cache.len() >= CACHE_CAPACITY {
            cache.pop_front();
        }
        cache.push_back((key, f.clone()));
        Ok(f)
    }

    fn negated_shifted(&self, s: f64) -> CsrMatrix {
        let e = self.e.clone().unwrap_or_else(|| CsrMatrix::identity(self.a.nrows()));
        e.axpby(s, &self.a, -1.0).expect("shapes checked at construction")
    }

    fn factor(&self, shift: Complex64) -> Result<Factorization> {
        let singular = || DreError::SingularShift { shift };
        if shift.im == 0.0 {
            let s = shift.re;
            if self.symmetric {
                let m = self.negated_shifted(s);
                if self.backend == SolverBackend::Pcg {
                    if let Ok(pre) = IncompleteCholesky::new(&m) {
                        return Ok(Factorization::Iterative { m, pre });
                    }
                }
                if let Ok(c) = SparseCholesky::factor(&m, self.order()) {
                    let dmin = (0..m.nrows()).map(|j| c.diag(j)).fold(f64::INFINITY, f64::min);
                    if dmin * dmin > 1e-14 * self.scale {
                        return Ok(Factorization::NegCholesky(c));
                    }
                    return Err(singular());
                }
            }
            let csc = CscMat::<f64>::shifted(&self.a, self.e.as_ref(), s, |v| v);
            let lu = SparseLu::factor(&csc, self.order(), PIVOT_THRESHOLD).map_err(|_| singular())?;
            log::debug!("real LU at shift {s:.4e}: nnz {}", lu.nnz());
            return Ok(Factorization::RealLu(lu));
        }
        let csc = CscMat::<Complex64>::shifted(&self.a, self.e.as_ref(), shift, |v| Complex64::new(v, 0.0));
        let lu = SparseLu::factor(&csc, self.order(), PIVOT_THRESHOLD).map_err(|_| singular())?;
        log::debug!("complex LU at shift {shift:.4e}: nnz {}", lu.nnz());
        Ok(Factorization::ComplexLu(lu))
    }

    /// `(A - s·E)⁻¹ R` for a real shift, or `(A - s·E)⁻ᵀ R` when `transpose` is set.
    pub fn solve_real(&self, shift: f64, rhs: &Mat, transpose: bool) -> Result<Mat> {
        let n = self.a.nrows();
        if rhs.nrows() != n {
            return Err(DreError::Dimension(format!("rhs has {} rows, expected {n}", rhs.nrows())));
        }
        let f = self.factorization(Complex64::new(shift, 0.0))?;
        let mut out = rhs.clone();
        let mut work = vec![0.0; n];
        match &*f {
            Factorization::NegCholesky(c) => {
                for mut col in out.column_iter_mut() {
                    let x = col.as_mut_slice();
                    c.solve_in_place(x, &mut work);
                    x.iter_mut().for_each(|v| *v = -*v);
                }
            }
            Factorization::RealLu(lu) => {
                for mut col in out.column_iter_mut() {
                    let x = col.as_mut_slice();
                    if transpose {
                        lu.solve_transpose_in_place(x, &mut work);
                    } else {
                        lu.solve_in_place(x, &mut work);
                    }
                }
            }
            Factorization::Iterative { m, pre } => {
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    let b: Vec<f64> = rhs.column(j).iter().map(|v| -v).collect();
                    let x = col.as_mut_slice();
                    x.iter_mut().for_each(|v| *v = 0.0);
                    pcg(m, pre, &b, x, PCG_TOL, 10 * n + 100)?;
                }
                return Ok(out);
            }
            Factorization::ComplexLu(_) => unreachable!("real shifts never build complex factors"),
        }
        self.refine_real(shift, rhs, &mut out, &f, transpose);
        Ok(out)
    }

    /// `(A - s·E)⁻¹ R` in complex arithmetic (plain transpose when `transpose` is set).
    pub fn solve_complex(&self, shift: Complex64, rhs: &CMat, transpose: bool) -> Result<CMat> {
        let n = self.a.nrows();
        if rhs.nrows() != n {
            return Err(DreError::Dimension(format!("rhs has {} rows, expected {n}", rhs.nrows())));
        }
        if shift.im == 0.0 {
            let (re, im) = super::dense::split_complex(rhs);
            let xr = self.solve_real(shift.re, &re, transpose)?;
            let xi = self.solve_real(shift.re, &im, transpose)?;
            return Ok(CMat::from_fn(n, rhs.ncols(), |i, j| Complex64::new(xr[(i, j)], xi[(i, j)])));
        }
        let f = self.factorization(shift)?;
        let Factorization::ComplexLu(lu) = &*f else { unreachable!("complex shifts build complex LU") };
        let mut out = rhs.clone();
        let mut work = vec![Complex64::new(0.0, 0.0); n];
        for pass in 0..2 {
            // one step of iterative refinement on top of the initial solve
            let target = if pass == 0 { rhs.clone() } else { rhs - self.shifted_apply_complex(shift, &out, transpose) };
            let mut delta = target;
            for mut col in delta.column_iter_mut() {
                let x = col.as_mut_slice();
                if transpose {
                    lu.solve_transpose_in_place(x, &mut work);
                } else {
                    lu.solve_in_place(x, &mut work);
                }
            }
            if pass == 0 {
                out = delta;
            } else {
                out += delta;
            }
        }
        Ok(out)
    }

    fn refine_real(&self, shift: f64, rhs: &Mat, out: &mut Mat, f: &Factorization, transpose: bool) {
        let n = self.a.nrows();
        let mut work = vec![0.0; n];
        let r = rhs - self.shifted_apply_real(shift, out, transpose);
        if r.norm() <= 1e-13 * rhs.norm() {
            return;
        }
        let mut d = r;
        for mut col in d.column_iter_mut() {
            let x = col.as_mut_slice();
            match f {
                Factorization::NegCholesky(c) => {
                    c.solve_in_place(x, &mut work);
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                Factorization::RealLu(lu) if transpose => lu.solve_transpose_in_place(x, &mut work),
                Factorization::RealLu(lu) => lu.solve_in_place(x, &mut work),
                _ => return,
            }
        }
        *out += d;
    }

    /// `(A - s·E) X` (or the transpose).
    pub fn shifted_apply_real(&self, shift: f64, x: &Mat, transpose: bool) -> Mat {
        let ax = if transpose { self.a.tr_mul_dense(x) } else { self.a.mul_dense(x) };
        let ex = match &self.e {
            Some(e) if transpose => e.tr_mul_dense(x),
            Some(e) => e.mul_dense(x),
            None => x.clone(),
        };
        ax - ex * shift
    }

    fn shifted_apply_complex(&self, shift: Complex64, x: &CMat, transpose: bool) -> CMat {
        let (re, im) = super::dense::split_complex(x);
        let apply = |m: &Mat| if transpose { self.a.tr_mul_dense(m) } else { self.a.mul_dense(m) };
        let mass = |m: &Mat| match &self.e {
            Some(e) if transpose => e.tr_mul_dense(m),
            Some(e) => e.mul_dense(m),
            None => m.clone(),
        };
        let (ar, ai) = (apply(&re), apply(&im));
        let (er, ei) = (mass(&re), mass(&im));
        CMat::from_fn(x.nrows(), x.ncols(), |i, j| {
            Complex64::new(ar[(i, j)], ai[(i, j)]) - shift * Complex64::new(er[(i, j)], ei[(i, j)])
        })
    }
}

/// One-shot `(A - s·I)⁻¹ R` through a solver's cache.
pub fn solve_shifted(solver: &ShiftedSolver, shift: Complex64, rhs: &Mat) -> Result<CMat> {
    solver.solve_complex(shift, &super::dense::to_complex(rhs), false)
}
