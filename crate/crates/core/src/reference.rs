//! Small dense reference solvers used to check the projection methods.

use crate::are::{care_scale, CareProblem};
use crate::bdf::{bdf_integrate, BdfScheme, ReducedTrajectory};
use crate::error::{DreError, Result};
use crate::linalg::dense::{symmetrize, Mat};
use crate::linalg::expm;
use crate::problem::DreProblem;

const MAX_DENSE: usize = 200;

// 4-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_8, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_8];

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE {
        return Err(DreError::InvalidArgument(format!("dense reference limited to n <= {MAX_DENSE}, got {n}")));
    }
    Ok(())
}

/// Panel breakpoints on `[0, t]`: dyadic levels toward 0, each split into
/// `sub` uniform pieces, so fast modes near `s = 0` are resolved.
fn breakpoints(t: f64, a_norm: f64, sub: usize) -> Vec<f64> {
    let levels = ((t * a_norm * 10.0).max(2.0).log2().ceil() as usize).clamp(1, 60);
    let mut edges = vec![0.0];
    let mut lo = 0.0;
    for k in (0..=levels).rev() {
        let hi = t / 2f64.powi(k as i32);
        for i in 1..=sub {
            edges.push(lo + (hi - lo) * i as f64 / sub as f64);
        }
        lo = hi;
    }
    edges
}

fn gramian_integral(a: &Mat, c: &Mat, t: f64, sub: usize) -> Result<Mat> {
    let n = a.nrows();
    let edges = breakpoints(t, a.abs().row_sum().max(), sub);
    let mut acc = Mat::zeros(n, n);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let s = lo + half * (1.0 + x);
            let ce = c * expm(&(a * s))?;
            acc += ce.tr_mul(&ce) * (wt * half);
        }
    }
    Ok(acc)
}

fn checked_integral(a: &Mat, c: &Mat, t: f64, quad_nodes: usize, scale: f64) -> Result<Mat> {
    let coarse = gramian_integral(a, c, t, quad_nodes)?;
    let fine = gramian_integral(a, c, t, 2 * quad_nodes)?;
    let estimate = (&fine - &coarse).norm();
    let tolerance = 1e-10 * scale.max(fine.norm()).max(f64::MIN_POSITIVE);
    if estimate > tolerance {
        return Err(DreError::Quadrature { estimate, tolerance });
    }
    Ok(fine)
}

fn check_closed_form(a: &Mat, c: &Mat, z: &Mat, quad_nodes: usize) -> Result<()> {
    let n = a.nrows();
    check_dense(n)?;
    if a.ncols() != n || c.ncols() != n || z.nrows() != n {
        return Err(DreError::Dimension("closed form: inconsistent shapes".into()));
    }
    if quad_nodes == 0 {
        return Err(DreError::InvalidArgument("closed form needs quad_nodes >= 1".into()));
    }
    Ok(())
}

/// `X(t) = e^{tAᵀ}ZZᵀe^{tA} + ∫₀ᵗ e^{sAᵀ}CᵀCe^{sA} ds` for the equation
/// without the quadratic term. The integral uses `quad_nodes` 4-point
/// Gauss panels per dyadic level; the result is checked against a run with
/// twice as many.
pub fn lyapunov_dre_closed_form(a: &Mat, c: &Mat, z: &Mat, t: f64, quad_nodes: usize) -> Result<Mat> {
    check_closed_form(a, c, z, quad_nodes)?;
    if !(t >= 0.0) {
        return Err(DreError::InvalidArgument(format!("closed form needs t >= 0, got {t}")));
    }
    let ez = expm(&(a.transpose() * t))? * z;
    let mut x = &ez * ez.transpose();
    if t > 0.0 {
        x += checked_integral(a, c, t, quad_nodes, x.norm())?;
    }
    Ok(symmetrize(&x))
}

/// The same closed form on the uniform grid `t_j = j t_f / steps`,
/// propagated by `X(t + δ) = e^{δAᵀ}X(t)e^{δA} + X_C(δ)`.
pub fn lyapunov_dre_closed_form_grid(a: &Mat, c: &Mat, z: &Mat, t_f: f64, steps: usize, quad_nodes: usize) -> Result<Vec<Mat>> {
    check_closed_form(a, c, z, quad_nodes)?;
    if !(t_f > 0.0) || steps == 0 {
        return Err(DreError::InvalidArgument("closed-form grid needs t_f > 0 and steps >= 1".into()));
    }
    let delta = t_f / steps as f64;
    let e = expm(&(a * delta))?;
    let x0 = z * z.transpose();
    let g = checked_integral(a, c, delta, quad_nodes, x0.norm())?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0);
    for j in 0..steps {
        let next = e.tr_mul(&(&out[j] * &e)) + &g;
        out.push(symmetrize(&next));
    }
    Ok(out)
}

/// High-resolution scheme used as ground truth: BDF(3) on 10⁴ steps.
pub fn reference_scheme() -> BdfScheme {
    BdfScheme::new(3, 10_000).expect("valid scheme")
}

/// Integrates the full, unprojected equation densely.
pub fn dense_dre_reference(problem: &DreProblem, scheme: &BdfScheme) -> Result<ReducedTrajectory> {
    check_dense(problem.n())?;
    let a = problem.op.to_dense();
    bdf_integrate(&a, &problem.b, &problem.c, &problem.x0(), problem.t_f, scheme)
}

/// Stabilizing CARE solution by integrating `Ẏ = F(Y)` from `Y = 0` with
/// classical RK4 until `F(Y)` is negligible. Slow; for `d <= 6` checks.
pub fn brute_force_care(p: &CareProblem, tol: f64, max_steps: usize) -> Result<Mat> {
    let d = p.dim();
    if d > 6 {
        return Err(DreError::InvalidArgument(format!("brute-force CARE limited to d <= 6, got {d}")));
    }
    let f = |y: &Mat| {
        let ty = p.t.tr_mul(y);
        let by = p.b.tr_mul(y);
        &ty + ty.transpose() - by.tr_mul(&by) + &p.q
    };
    let mut y = Mat::zeros(d, d);
    let mut h = 0.1 / (1.0 + p.t.norm() + p.q.norm().sqrt() * p.b.norm());
    for _ in 0..max_steps {
        let k1 = f(&y);
        if k1.norm() <= tol * care_scale(p, &y) {
            return Ok(symmetrize(&y));
        }
        let k2 = f(&(&y + &k1 * (h / 2.0)));
        let k3 = f(&(&y + &k2 * (h / 2.0)));
        let k4 = f(&(&y + &k3 * h));
        let next = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !next.iter().all(|v| v.is_finite()) {
            h /= 2.0;
            y = Mat::zeros(d, d);
            continue;
        }
        y = next;
    }
    Err(DreError::FixedPointNoConvergence { iterations: max_steps, residual: f(&y).norm() })
}
