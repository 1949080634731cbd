//! Projection solvers: grow a Krylov basis, integrate the projected equation,
//! stop on the backward error, then re-integrate with a finer scheme.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::are::{solve_care, CareProblem};
use crate::bdf::{bdf_integrate, difference_quotient, riccati_rhs, BdfScheme, ReducedTrajectory};
use crate::error::{DreError, Result};
use crate::krylov::{
    eksm_expand, estimate_bounds, init_extended, init_rational, next_shift, rksm_expand, BasisKind, BasisState, RationalExtras,
};
use crate::linalg::dense::{symmetrize, Mat};
use crate::linalg::truncate::{sym_truncate, RANK_TOL};
use crate::problem::DreProblem;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub kind: BasisKind,
    /// Stop once the backward error drops below this.
    pub tol: f64,
    /// Integrator used while the basis grows; its step count is ℓ.
    pub reduction: BdfScheme,
    /// Integrator for the final projected equation.
    pub refinement: BdfScheme,
    /// Expansion stops once the basis has at least this many columns.
    pub max_dim: usize,
    /// Relative eigenvalue cutoff for the output factors.
    pub rank_tol: f64,
    pub real_shifts_only: bool,
    /// Evaluate the residual every this many iterations.
    pub residual_check_period: usize,
    /// Lower and upper spectral bounds for the rational poles; estimated when absent.
    pub shift_bounds: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: BasisKind::Rational,
            tol: 1e-7,
            reduction: BdfScheme::new(1, 10).expect("valid scheme"),
            refinement: BdfScheme::new(2, 100).expect("valid scheme"),
            max_dim: usize::MAX,
            rank_tol: RANK_TOL,
            real_shifts_only: false,
            residual_check_period: 1,
            shift_bounds: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(DreError::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.residual_check_period == 0 {
            return Err(DreError::InvalidArgument("residual_check_period must be at least 1".into()));
        }
        if self.max_dim == 0 {
            return Err(DreError::InvalidArgument("max_dim must be at least 1".into()));
        }
        if self.max_dim != usize::MAX && self.max_dim > n {
            return Err(DreError::InvalidArgument(format!("max_dim {} exceeds n = {n}", self.max_dim)));
        }
        if let Some((lo, hi)) = self.shift_bounds {
            if !(lo > 0.0 && hi >= lo) {
                return Err(DreError::InvalidArgument(format!("shift bounds must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Split-residual quantities and the backward error built from them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub rho: f64,
    pub xi: f64,
    pub psi: f64,
    pub backward_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub basis_dim: usize,
    /// Absent on iterations that skipped the residual check.
    pub estimate: Option<ResidualEstimate>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: BasisState,
    /// Last reduction-phase trajectory.
    pub reduction: ReducedTrajectory,
    /// Refined trajectory; `factors[j]` belongs to `refined.times[j]`.
    pub refined: ReducedTrajectory,
    pub factors: Vec<Mat>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub estimate: ResidualEstimate,
    pub shifts: Vec<Complex64>,
    pub reduction_seconds: f64,
    pub refinement_seconds: f64,
}

impl SolveResult {
    /// `V` (n × dim).
    pub fn basis(&self) -> &Mat {
        self.state.v()
    }

    pub fn times(&self) -> &[f64] {
        &self.refined.times
    }

    /// `X(t_j) ≈ V Ŷⱼ Ŷⱼᵀ Vᵀ` returned as the n × r factor `V Ŷⱼ`.
    pub fn full_factor(&self, j: usize) -> Mat {
        self.state.v() * &self.factors[j]
    }

    pub fn min_rank(&self) -> usize {
        self.factors.iter().map(|f| f.ncols()).min().unwrap_or(0)
    }

    pub fn max_rank(&self) -> usize {
        self.factors.iter().map(|f| f.ncols()).max().unwrap_or(0)
    }

    /// Dense `X_m(t_j)`; for small problems only.
    pub fn dense_solution(&self, j: usize) -> Mat {
        let v = self.state.v();
        v * &self.refined.values[j] * v.transpose()
    }
}

/// `ρ = Σ_{j=1..ℓ} h ‖τᵀ Y_j‖_F`.
pub fn residual_quadrature(traj: &ReducedTrajectory, tau: &Mat) -> f64 {
    let h = traj.step();
    if tau.ncols() == 0 {
        return 0.0;
    }
    traj.values[1..].iter().map(|y| h * tau.tr_mul(y).norm()).sum()
}

/// Assembles the backward error `ρ / (t_f‖C‖² + 2ξ + ψ)` with `ξ`, `ψ`
/// computed from reduced quantities only.
pub fn backward_error(rho: f64, traj: &ReducedTrajectory, state: &BasisState, c_norm_sq: f64, t_f: f64) -> ResidualEstimate {
    let h = traj.step();
    let (mut xi, mut psi) = (0.0, 0.0);
    for y in &traj.values[1..] {
        let ty = state.t().tr_mul(y).norm_squared();
        let out = if state.tau().ncols() > 0 { state.tau().tr_mul(y).norm_squared() } else { 0.0 };
        xi += h * (ty + out).sqrt();
        psi += h * (y * state.b_m()).norm_squared();
    }
    let denom = t_f * c_norm_sq + 2.0 * xi + psi;
    let backward_error = if denom < 1e-300 { rho } else { rho / denom };
    ResidualEstimate { rho, xi, psi, backward_error }
}

/// Reduced residual estimate for a trajectory on the current basis.
pub fn residual_estimate(state: &BasisState, traj: &ReducedTrajectory, problem: &DreProblem) -> ResidualEstimate {
    let rho = residual_quadrature(traj, state.tau());
    backward_error(rho, traj, state, problem.c.norm_squared(), problem.t_f)
}

pub fn integrate_projected(state: &BasisState, scheme: &BdfScheme, t_f: f64) -> Result<ReducedTrajectory> {
    let d = state.dim();
    if d == 0 {
        let h = t_f / scheme.steps as f64;
        return Ok(ReducedTrajectory {
            times: (0..=scheme.steps).map(|j| j as f64 * h).collect(),
            values: vec![Mat::zeros(0, 0); scheme.steps + 1],
        });
    }
    let y0 = state.z_m() * state.z_m().transpose();
    bdf_integrate(state.t(), state.b_m(), state.c_m(), &y0, t_f, scheme)
}

enum Engine {
    Extended,
    Rational(RationalExtras),
}

/// What an observer sees after each expansion.
pub struct IterationView<'a> {
    pub state: &'a BasisState,
    /// Reduction-phase trajectory, present when the residual was checked.
    pub trajectory: Option<&'a ReducedTrajectory>,
    pub record: &'a IterationRecord,
}

pub fn solve_dre(problem: &DreProblem, config: &SolverConfig) -> Result<SolveResult> {
    solve_dre_observed(problem, config, |_| {})
}

/// Like [`solve_dre`], calling `observer` after every basis expansion.
pub fn solve_dre_observed(problem: &DreProblem, config: &SolverConfig, mut observer: impl FnMut(&IterationView)) -> Result<SolveResult> {
    config.validate(problem.n())?;
    let op = problem.op.as_ref();
    let clock = Instant::now();
    let (mut state, mut engine) = match config.kind {
        BasisKind::Extended => (init_extended(op, &problem.b, &problem.c, &problem.z)?, Engine::Extended),
        BasisKind::Rational => {
            let st = init_rational(op, &problem.b, &problem.c, &problem.z)?;
            let bounds = match config.shift_bounds {
                Some(b) => b,
                None if st.dim() > 0 => estimate_bounds(op)?,
                None => (1.0, 1.0),
            };
            log::debug!("shift bounds [{:.4e}, {:.4e}]", bounds.0, bounds.1);
            (st, Engine::Rational(RationalExtras::new(bounds)))
        }
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut estimate = ResidualEstimate::default();
    let mut reduction = integrate_projected(&state, &config.reduction, problem.t_f)?;
    let mut iteration = 0;
    while state.dim() > 0 && !state.stagnated() {
        iteration += 1;
        let at = |e: DreError| DreError::AtIteration { iteration, source: Box::new(e) };
        match &mut engine {
            Engine::Extended => eksm_expand(&mut state, op).map_err(at)?,
            Engine::Rational(extras) => {
                let y_tf = reduction.last();
                let y_tf = (y_tf.nrows() == state.dim()).then_some(y_tf);
                let shift = next_shift(&state, extras, y_tf, config.real_shifts_only).map_err(at)?;
                log::debug!("iteration {iteration}: shift {shift:.4e}");
                rksm_expand(&mut state, extras, op, shift).map_err(at)?;
            }
        }
        let check = state.stagnated() || iteration % config.residual_check_period == 0 || state.dim() >= config.max_dim;
        let mut record = IterationRecord { iteration, basis_dim: state.dim(), estimate: None, wall_seconds: 0.0 };
        if check {
            reduction = integrate_projected(&state, &config.reduction, problem.t_f).map_err(at)?;
            estimate = residual_estimate(&state, &reduction, problem);
            record.estimate = Some(estimate);
            log::info!(
                "{} iteration {iteration}: dim {} backward error {:.3e}",
                config.kind.label(),
                state.dim(),
                estimate.backward_error
            );
        }
        record.wall_seconds = clock.elapsed().as_secs_f64();
        observer(&IterationView { state: &state, trajectory: check.then_some(&reduction), record: &record });
        history.push(record);
        if check && estimate.backward_error < config.tol {
            converged = true;
            break;
        }
        if state.dim() >= config.max_dim {
            break;
        }
    }
    if state.dim() == 0 || (state.stagnated() && history.last().map_or(true, |r| r.estimate.is_none())) {
        reduction = integrate_projected(&state, &config.reduction, problem.t_f)?;
        estimate = residual_estimate(&state, &reduction, problem);
        converged = estimate.backward_error < config.tol;
        if history.is_empty() {
            history.push(IterationRecord {
                iteration: 0,
                basis_dim: state.dim(),
                estimate: Some(estimate),
                wall_seconds: clock.elapsed().as_secs_f64(),
            });
        }
    }
    if state.stagnated() {
        // V is invariant: the outer residual vanishes identically
        converged = converged || estimate.rho == 0.0;
    }
    let reduction_seconds = clock.elapsed().as_secs_f64();
    let refine_clock = Instant::now();
    let refined = integrate_projected(&state, &config.refinement, problem.t_f)?;
    let factors = refined
        .values
        .iter()
        .map(|y| if y.nrows() == 0 { Ok(Mat::zeros(0, 0)) } else { sym_truncate(&symmetrize(y), config.rank_tol) })
        .collect::<Result<Vec<_>>>()?;
    let refinement_seconds = refine_clock.elapsed().as_secs_f64();
    let shifts = match engine {
        Engine::Rational(extras) => extras.shifts,
        Engine::Extended => Vec::new(),
    };
    Ok(SolveResult {
        state,
        reduction,
        refined,
        factors,
        history,
        converged,
        estimate,
        shifts,
        reduction_seconds,
        refinement_seconds,
    })
}

/// Stabilizing solution of the projected algebraic equation
/// `TᵀY + YT − YB_mB_mᵀY + C_mᵀC_m = 0`.
pub fn steady_state(state: &BasisState) -> Result<Mat> {
    let p = CareProblem::new(state.t().clone(), state.b_m().clone(), state.c_m().tr_mul(state.c_m()))?;
    solve_care(&p)
}

/// `K(t_j) = B_mᵀ Y_j Vᵀ` kept as a small core times the basis.
#[derive(Debug, Clone)]
pub struct FeedbackGain {
    pub core: Mat,
    pub basis: Arc<Mat>,
}

impl FeedbackGain {
    /// `K v`.
    pub fn apply(&self, v: &Mat) -> Mat {
        &self.core * self.basis.tr_mul(v)
    }

    pub fn to_dense(&self) -> Mat {
        &self.core * self.basis.transpose()
    }
}

pub fn feedback_gain(result: &SolveResult, j: usize) -> Result<FeedbackGain> {
    let y = result
        .refined
        .values
        .get(j)
        .ok_or_else(|| DreError::InvalidArgument(format!("instant {j} out of range 0..{}", result.refined.len())))?;
    let core = if y.nrows() == 0 { Mat::zeros(result.state.b_m().ncols(), 0) } else { result.state.b_m().tr_mul(y) };
    Ok(FeedbackGain { core, basis: Arc::new(result.state.v().clone()) })
}

/// Dense check of the residual split at instants `j = 1..=ℓ`: returns
/// `(‖R‖², ‖R_inner‖² + 2‖τᵀY‖²)` with `R` formed from `X = VYVᵀ` and the
/// BDF difference quotient.
pub fn dense_residual_split_check(
    problem: &DreProblem,
    state: &BasisState,
    traj: &ReducedTrajectory,
    scheme: &BdfScheme,
) -> Result<Vec<(f64, f64)>> {
    if problem.n() > 500 {
        return Err(DreError::InvalidArgument("dense residual check is limited to n <= 500".into()));
    }
    let a = problem.op.to_dense();
    (1..traj.len())
        .map(|k| {
            let dy = difference_quotient(traj, scheme, k)?;
            Ok(residual_split_pair(&a, problem, state, &traj.values[k], &dy))
        })
        .collect()
}

/// The two sides of the split identity for an arbitrary symmetric pair `(Y, Ẏ)`.
pub fn residual_split_pair(a: &Mat, problem: &DreProblem, state: &BasisState, y: &Mat, dy: &Mat) -> (f64, f64) {
    let v = state.v();
    let x = v * y * v.transpose();
    let dx = v * dy * v.transpose();
    let ax = a.tr_mul(&x);
    let bx = problem.b.tr_mul(&x);
    let r = dx - (&ax + ax.transpose() - bx.tr_mul(&bx) + problem.c.tr_mul(&problem.c));
    let inner = dy - riccati_rhs(state.t(), state.b_m(), state.c_m(), y);
    let outer = state.outer_residual(y);
    (r.norm_squared(), inner.norm_squared() + 2.0 * outer * outer)
}
