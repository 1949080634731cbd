//! Matrix-valued BDF integration of the projected Riccati equation.
//!
//! Each implicit step `Y⁽ᵏ⁺¹⁾ − Σ αᵢ Y⁽ᵏ⁺¹⁻ⁱ⁾ = hβ F(Y⁽ᵏ⁺¹⁾)` is an algebraic
//! Riccati equation in `Y⁽ᵏ⁺¹⁾`.

use crate::are::{solve_care_with, CareOptions, CareProblem};
use crate::error::{DreError, Result};
use crate::linalg::dense::{symmetrize, Mat};
use crate::linalg::schur::real_schur;

/// BDF of order `b ∈ {1, 2, 3}` on `ℓ` uniform steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    pub order: usize,
    pub steps: usize,
    pub beta: f64,
    pub alphas: Vec<f64>,
}

impl BdfScheme {
    pub fn new(order: usize, steps: usize) -> Result<Self> {
        let (beta, alphas) = match order {
            1 => (1.0, vec![1.0]),
            2 => (2.0 / 3.0, vec![4.0 / 3.0, -1.0 / 3.0]),
            3 => (6.0 / 11.0, vec![18.0 / 11.0, -9.0 / 11.0, 2.0 / 11.0]),
            _ => return Err(DreError::InvalidArgument(format!("BDF order must be 1, 2 or 3, got {order}"))),
        };
        if steps == 0 {
            return Err(DreError::InvalidArgument("BDF needs at least one step".into()));
        }
        Ok(Self { order, steps, beta, alphas })
    }

    /// Parses labels such as `bdf2-100`.
    pub fn parse(label: &str) -> Result<Self> {
        let bad = || DreError::InvalidArgument(format!("expected a label like bdf2-100, got {label:?}"));
        let rest = label.trim().to_ascii_lowercase();
        let rest = rest.strip_prefix("bdf").ok_or_else(bad)?;
        let (b, l) = rest.split_once('-').ok_or_else(bad)?;
        Self::new(b.parse().map_err(|_| bad())?, l.parse().map_err(|_| bad())?)
    }

    pub fn label(&self) -> String {
        format!("bdf{}-{}", self.order, self.steps)
    }
}

/// Solutions `Y_j ≈ Y(t_j)` on `t_j = j·h`, `j = 0..=ℓ`.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<Mat>,
}

impl ReducedTrajectory {
    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> &Mat {
        self.values.last().expect("trajectory holds the initial value")
    }
}

/// The CARE for one step. `history[0]` is the most recent solution.
pub fn bdf_step_matrices(t: &Mat, b: &Mat, c: &Mat, history: &[&Mat], scheme: &BdfScheme, h: f64) -> Result<CareProblem> {
    if history.len() != scheme.order {
        return Err(DreError::InvalidArgument(format!(
            "BDF({}) needs {} history entries, got {}",
            scheme.order,
            scheme.order,
            history.len()
        )));
    }
    let d = t.nrows();
    let hb = h * scheme.beta;
    let t_hat = t * hb - Mat::identity(d, d) * 0.5;
    let b_hat = b * hb.sqrt();
    let mut q_hat = c.tr_mul(c) * hb;
    for (alpha, y) in scheme.alphas.iter().zip(history) {
        q_hat += *y * *alpha;
    }
    Ok(CareProblem { t: t_hat, b: b_hat, q: symmetrize(&q_hat) })
}

fn step_solve(t: &Mat, b: &Mat, c: &Mat, history: &[&Mat], scheme: &BdfScheme, h: f64) -> Result<Mat> {
    let p = bdf_step_matrices(t, b, c, history, scheme, h)?;
    let warm = p.b.tr_mul(history[0]);
    let opts = CareOptions { require_psd_q: false, initial_gain: Some(warm), ..Default::default() };
    Ok(solve_care_with(&p, &opts)?.y)
}

/// Integrates `Ẏ = TᵀY + YT − YBBᵀY + CᵀC`, `Y(0) = Y0` over `[0, t_f]`.
///
/// Orders above one are started from BDF(1) values on the first `b − 1`
/// steps, computed on grids `h`, `h/2`, `h/4` and Richardson-extrapolated
/// so the starting error does not limit the order.
pub fn bdf_integrate(t: &Mat, b: &Mat, c: &Mat, y0: &Mat, t_f: f64, scheme: &BdfScheme) -> Result<ReducedTrajectory> {
    let d = t.nrows();
    if t.ncols() != d || b.nrows() != d || c.ncols() != d || y0.shape() != (d, d) {
        return Err(DreError::Dimension("inconsistent reduced matrices".into()));
    }
    if !(t_f > 0.0) {
        return Err(DreError::InvalidArgument(format!("horizon must be positive, got {t_f}")));
    }
    let l = scheme.steps;
    let h = t_f / l as f64;
    let mut values = Vec::with_capacity(l + 1);
    values.push(symmetrize(y0));
    let start = (scheme.order - 1).min(l);
    if start > 0 {
        let boot = bootstrap(t, b, c, &values[0], h, start).map_err(|e| fail(1, e, &values))?;
        values.extend(boot);
    }
    for k in start..l {
        let history: Vec<&Mat> = (0..scheme.order).map(|i| &values[k - i]).collect();
        let y = step_solve(t, b, c, &history, scheme, h).map_err(|e| fail(k + 1, e, &values))?;
        values.push(y);
    }
    let times = (0..=l).map(|j| j as f64 * h).collect();
    Ok(ReducedTrajectory { times, values })
}

fn fail(step: usize, e: DreError, values: &[Mat]) -> DreError {
    DreError::Integration { step, source: Box::new(e), partial: values.to_vec() }
}

fn bootstrap(t: &Mat, b: &Mat, c: &Mat, y0: &Mat, h: f64, count: usize) -> Result<Vec<Mat>> {
    let euler = BdfScheme::new(1, 1)?;
    let mut runs = Vec::with_capacity(3);
    for refine in [1usize, 2, 4] {
        let hs = h / refine as f64;
        let mut y = y0.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            for _ in 0..refine {
                y = step_solve(t, b, c, &[&y], &euler, hs)?;
            }
            out.push(y.clone());
        }
        runs.push(out);
    }
    Ok((0..count)
        .map(|j| symmetrize(&((&runs[2][j] * 8.0 - &runs[1][j] * 6.0 + &runs[0][j]) / 3.0)))
        .collect())
}

/// Right-hand side `F(Y) = TᵀY + YT − YBBᵀY + CᵀC`.
pub fn riccati_rhs(t: &Mat, b: &Mat, c: &Mat, y: &Mat) -> Mat {
    let ty = t.tr_mul(y);
    let by = b.tr_mul(y);
    &ty + ty.transpose() - by.tr_mul(&by) + c.tr_mul(c)
}

/// BDF difference quotient at instant `k ≥ 1`, using order `min(k, b)`.
pub fn difference_quotient(traj: &ReducedTrajectory, scheme: &BdfScheme, k: usize) -> Result<Mat> {
    let order = scheme.order.min(k);
    let s = BdfScheme::new(order, 1)?;
    let h = traj.step();
    let mut dy = traj.values[k].clone();
    for (i, alpha) in s.alphas.iter().enumerate() {
        dy -= &traj.values[k - 1 - i] * *alpha;
    }
    Ok(dy / (h * s.beta))
}

/// `‖Ẏ − F(Y)‖_F` at instants `j = 1..=ℓ` with `Ẏ` the BDF quotient.
pub fn inner_defect(traj: &ReducedTrajectory, t: &Mat, b: &Mat, c: &Mat, scheme: &BdfScheme) -> Result<Vec<f64>> {
    (1..traj.len())
        .map(|k| {
            let dy = difference_quotient(traj, scheme, k)?;
            Ok((dy - riccati_rhs(t, b, c, &traj.values[k])).norm())
        })
        .collect()
}

/// Largest real part of the spectrum of `T − BBᵀY`.
pub fn closed_loop_abscissa(t: &Mat, b: &Mat, y: &Mat) -> Result<f64> {
    Ok(real_schur(&(t - b * b.tr_mul(y)))?.max_real_part())
}
