//! Dense Lyapunov and algebraic Riccati solvers for the small projected equations.

use nalgebra::SymmetricEigen;

use crate::error::{DreError, Result};
use crate::linalg::dense::{symmetrize, Mat};
use crate::linalg::schur::real_schur;

/// Continuous-time algebraic Riccati equation `TᵀY + YT − YBBᵀY + Q = 0`.
#[derive(Debug, Clone)]
pub struct CareProblem {
    pub t: Mat,
    pub b: Mat,
    pub q: Mat,
}

impl CareProblem {
    pub fn new(t: Mat, b: Mat, q: Mat) -> Result<Self> {
        let d = t.nrows();
        if t.ncols() != d || b.nrows() != d || q.shape() != (d, d) {
            return Err(DreError::Dimension(format!(
                "CARE shapes: T {:?}, B {:?}, Q {:?}",
                t.shape(),
                b.shape(),
                q.shape()
            )));
        }
        let asym = (&q - q.transpose()).norm();
        if asym > 1e-12 * q.norm().max(f64::MIN_POSITIVE) {
            return Err(DreError::NotSymmetric(asym / q.norm()));
        }
        Ok(Self { t, b, q })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct CareOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Reject an indefinite `Q`. Multistep BDF constants can be indefinite,
    /// so the integrator turns this off.
    pub require_psd_q: bool,
    /// Starting feedback `K₀` (s × d); used only if `T − BK₀` is stable.
    pub initial_gain: Option<Mat>,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 50, require_psd_q: true, initial_gain: None }
    }
}

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub y: Mat,
    pub iterations: usize,
    /// `‖R(Y)‖_F / care_scale`.
    pub relative_residual: f64,
}

/// Solves `FᵀY + YF + Q = 0` for symmetric `Q` by Bartels–Stewart on the real Schur form of `F`.
pub fn solve_lyapunov(f: &Mat, q: &Mat) -> Result<Mat> {
    let d = f.nrows();
    if f.ncols() != d || q.shape() != (d, d) {
        return Err(DreError::Dimension(format!("Lyapunov shapes: F {:?}, Q {:?}", f.shape(), q.shape())));
    }
    if d == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let schur = real_schur(f)?;
    let (u, s) = (&schur.q, &schur.t);
    let qt = u.tr_mul(q) * u;
    let blocks = schur.blocks();
    let fnorm = f.norm().max(f64::MIN_POSITIVE);
    let mut y = Mat::zeros(d, d);
    for (bk, &(k0, kn)) in blocks.iter().enumerate() {
        for &(l0, ln) in &blocks[bk..] {
            // rhs = −Q̃_kl − Σ_{i<k} S_ikᵀ Ỹ_il − Σ_{j<l} Ỹ_kj S_jl
            let mut rhs = -qt.view((k0, l0), (kn, ln)).into_owned();
            if k0 > 0 {
                rhs -= s.view((0, k0), (k0, kn)).tr_mul(&y.view((0, l0), (k0, ln)));
            }
            if l0 > 0 {
                rhs -= y.view((k0, 0), (kn, l0)) * s.view((0, l0), (l0, ln));
            }
            let skk = s.view((k0, k0), (kn, kn)).into_owned();
            let sll = s.view((l0, l0), (ln, ln)).into_owned();
            let x = small_sylvester(&skk, &sll, &rhs, fnorm)?;
            y.view_mut((k0, l0), (kn, ln)).copy_from(&x);
            if l0 != k0 {
                y.view_mut((l0, k0), (ln, kn)).copy_from(&x.transpose());
            }
        }
    }
    Ok(symmetrize(&(u * y * u.transpose())))
}

/// `AᵀX + XB = R` for blocks of size ≤ 2 via the Kronecker form.
fn small_sylvester(a: &Mat, b: &Mat, r: &Mat, scale: f64) -> Result<Mat> {
    let (p, q) = (a.nrows(), b.nrows());
    let m = p * q;
    let mut k = Mat::zeros(m, m);
    // vec(AᵀX) = (I ⊗ Aᵀ) vec X, vec(XB) = (Bᵀ ⊗ I) vec X
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for ii in 0..p {
                k[(row, j * p + ii)] += a[(ii, i)];
            }
            for jj in 0..q {
                k[(row, jj * p + i)] += b[(jj, j)];
            }
        }
    }
    let lu = k.full_piv_lu();
    let piv = (0..m).map(|i| lu.u()[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if piv <= 1e3 * f64::EPSILON * scale {
        return Err(DreError::SingularLyapunov(piv));
    }
    let rhs = Mat::from_column_slice(m, 1, r.as_slice());
    let x = lu.solve(&rhs).ok_or(DreError::SingularLyapunov(piv))?;
    Ok(Mat::from_column_slice(p, q, x.as_slice()))
}

/// Frobenius norm of `TᵀY + YT − YBBᵀY + Q`.
pub fn care_residual(p: &CareProblem, y: &Mat) -> f64 {
    residual_matrix(p, y).norm()
}

fn residual_matrix(p: &CareProblem, y: &Mat) -> Mat {
    let ty = p.t.tr_mul(y);
    let byt = p.b.tr_mul(y);
    &ty + ty.transpose() - byt.tr_mul(&byt) + &p.q
}

/// Normalization for relative CARE residuals: `‖Q‖ + 2‖T‖‖Y‖ + ‖BᵀY‖²`.
pub fn care_scale(p: &CareProblem, y: &Mat) -> f64 {
    let by = p.b.tr_mul(y).norm();
    p.q.norm() + 2.0 * p.t.norm() * y.norm() + by * by
}

pub fn solve_care(p: &CareProblem) -> Result<Mat> {
    Ok(solve_care_with(p, &CareOptions::default())?.y)
}

/// Newton–Kleinman iteration for the stabilizing solution.
pub fn solve_care_with(p: &CareProblem, opts: &CareOptions) -> Result<CareSolution> {
    let d = p.dim();
    if d == 0 {
        return Ok(CareSolution { y: Mat::zeros(0, 0), iterations: 0, relative_residual: 0.0 });
    }
    if opts.require_psd_q {
        let lmin = SymmetricEigen::new(symmetrize(&p.q)).eigenvalues.min();
        if lmin < -1e-10 * p.q.norm() {
            return Err(DreError::IndefiniteConstant(lmin));
        }
    }
    let mut k = initial_gain(p, opts)?;
    let mut y_prev: Option<Mat> = None;
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let closed = &p.t - &p.b * &k;
        let y = solve_lyapunov(&closed, &(&p.q + k.tr_mul(&k)))?;
        let scale = care_scale(p, &y).max(f64::MIN_POSITIVE);
        let rel = care_residual(p, &y) / scale;
        let step = y_prev.as_ref().map_or(f64::INFINITY, |yp| (&y - yp).norm());
        let stalled = step <= 1e-14 * y.norm().max(f64::MIN_POSITIVE) || (it > 3 && rel >= 0.5 * last);
        if rel <= opts.tol || (stalled && rel <= 1e3 * opts.tol) {
            return Ok(CareSolution { y: symmetrize(&y), iterations: it, relative_residual: rel });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(DreError::NonFinite("Newton iterate"));
        }
        last = rel;
        k = p.b.tr_mul(&y);
        y_prev = Some(y);
    }
    Err(DreError::NewtonNoConvergence { iterations: opts.max_iter, residual: last })
}

fn is_stable(m: &Mat) -> Result<bool> {
    Ok(real_schur(m)?.max_real_part() < 0.0)
}

fn initial_gain(p: &CareProblem, opts: &CareOptions) -> Result<Mat> {
    let (d, s) = (p.dim(), p.b.ncols());
    if let Some(k0) = &opts.initial_gain {
        if k0.shape() == (s, d) && is_stable(&(&p.t - &p.b * k0))? {
            return Ok(k0.clone());
        }
    }
    let zero = Mat::zeros(s, d);
    if is_stable(&p.t)? {
        return Ok(zero);
    }
    if s == 0 || p.b.norm() == 0.0 {
        return Err(DreError::NotStabilizable);
    }
    // pole shifting with K = c·Bᵀ
    let bnorm2 = p.b.norm_squared();
    let tnorm = p.t.norm();
    let mut c = (tnorm / bnorm2).max(1.0 / bnorm2);
    for _ in 0..8 {
        let k = p.b.transpose() * c;
        if is_stable(&(&p.t - &p.b * &k))? {
            return Ok(k);
        }
        c *= 10.0;
    }
    // Bass: (T + βI)P + P(T + βI)ᵀ = 2BBᵀ, K = BᵀP⁻¹
    let beta = 1.0 + tnorm;
    let shifted = (&p.t + Mat::identity(d, d) * beta).transpose();
    let pm = solve_lyapunov(&shifted, &(&p.b * p.b.transpose() * -2.0))?;
    let k = pm.cholesky().map(|ch| ch.solve(&p.b).transpose()).ok_or(DreError::NotStabilizable)?;
    if is_stable(&(&p.t - &p.b * &k))? {
        Ok(k)
    } else {
        Err(DreError::NotStabilizable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(r, c, v)
    }

    #[test]
    fn lyapunov_identity() {
        let y = solve_lyapunov(&(-Mat::identity(3, 3)), &Mat::identity(3, 3)).unwrap();
        assert!((y - Mat::identity(3, 3) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn lyapunov_diagonal_formula() {
        let y = solve_lyapunov(&m(2, 2, &[-1.0, 0.0, 0.0, -2.0]), &Mat::from_element(2, 2, 1.0)).unwrap();
        let want = m(2, 2, &[0.5, 1.0 / 3.0, 1.0 / 3.0, 0.25]);
        assert!((y - want).norm() < 1e-15);
    }

    #[test]
    fn lyapunov_complex_blocks() {
        let f = m(4, 4, &[-1.0, 3.0, 0.5, 0.0, -3.0, -1.0, 0.0, 1.0, 0.2, 0.0, -2.0, 1.5, 0.0, 0.1, -1.5, -2.0]);
        let q = m(4, 4, &[2.0, 0.3, 0.0, 0.1, 0.3, 1.0, 0.2, 0.0, 0.0, 0.2, 3.0, 0.4, 0.1, 0.0, 0.4, 1.0]);
        let y = solve_lyapunov(&f, &q).unwrap();
        let r = f.transpose() * &y + &y * &f + &q;
        assert!(r.norm() < 1e-12 * (f.norm() * y.norm() + q.norm()));
    }

    #[test]
    fn lyapunov_singular_reported() {
        let f = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(solve_lyapunov(&f, &Mat::identity(2, 2)), Err(DreError::SingularLyapunov(_))));
    }

    #[test]
    fn scalar_cares() {
        let p = CareProblem::new(m(1, 1, &[-1.0]), Mat::zeros(1, 1), m(1, 1, &[2.0])).unwrap();
        assert!((solve_care(&p).unwrap()[0] - 1.0).abs() < 1e-14);
        let p = CareProblem::new(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0])).unwrap();
        let y = solve_care(&p).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!(care_residual(&p, &y) < 1e-14);
        assert!((care_residual(&p, &Mat::zeros(1, 1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unstable_t_is_stabilized() {
        let t = m(2, 2, &[1.0, 2.0, 0.0, 0.5]);
        let b = m(2, 1, &[0.0, 1.0]);
        let p = CareProblem::new(t, b, Mat::identity(2, 2)).unwrap();
        let y = solve_care(&p).unwrap();
        assert!(care_residual(&p, &y) <= 1e-11 * care_scale(&p, &y));
        let closed = &p.t - &p.b * p.b.transpose() * &y;
        assert!(real_schur(&closed).unwrap().max_real_part() < 0.0);
    }

    #[test]
    fn indefinite_q_rejected() {
        let p = CareProblem::new(-Mat::identity(2, 2), Mat::zeros(2, 1), m(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(matches!(solve_care(&p), Err(DreError::IndefiniteConstant(_))));
        let opts = CareOptions { require_psd_q: false, ..Default::default() };
        assert!(solve_care_with(&p, &opts).is_ok());
    }
}
