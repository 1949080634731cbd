//! Block Krylov bases for `Aᵀ` started from `N = [Cᵀ, Z]`.
//!
//! A basis keeps the Arnoldi-type relation `Aᵀ V = V Tᵀ + ν τᵀ` with
//! `T = Vᵀ A V`. The block that would come next (`pending`) is computed
//! ahead of time and is not part of `V`; it supplies `ν` and `τ`.

mod extended;
mod rational;
mod shifts;

pub use extended::{eksm_expand, init_extended};
pub use rational::{init_rational, rksm_expand, RationalExtras};
pub use shifts::{estimate_bounds, next_shift, shift_objective};

use crate::error::{DreError, Result};
use crate::linalg::dense::{hcat, qr_thin_tol, vcat, Mat};
use crate::linalg::operator::LinearOperator;

/// Extended or rational Krylov.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Extended,
    Rational,
}

impl BasisKind {
    pub fn label(self) -> &'static str {
        match self {
            BasisKind::Extended => "eksm",
            BasisKind::Rational => "rksm",
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = DreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eksm" | "extended" => Ok(BasisKind::Extended),
            "rksm" | "rational" => Ok(BasisKind::Rational),
            other => Err(DreError::InvalidArgument(format!("unknown basis kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Pending {
    pub q: Mat,
    pub at_q: Mat,
    /// Leading columns generated by `Aᵀ` (extended only).
    pub forward: usize,
}

#[derive(Debug, Clone)]
pub struct BasisState {
    pub(crate) kind: BasisKind,
    pub(crate) v: Mat,
    pub(crate) at_v: Mat,
    pub(crate) widths: Vec<usize>,
    pub(crate) forward: Vec<usize>,
    pub(crate) t: Mat,
    pub(crate) b_m: Mat,
    pub(crate) c_m: Mat,
    pub(crate) z_m: Mat,
    pub(crate) nu: Mat,
    pub(crate) tau: Mat,
    pub(crate) pending: Option<Pending>,
    pub(crate) stagnated: bool,
    pub(crate) block_width: usize,
    b: Mat,
    ct: Mat,
    z: Mat,
}

impl BasisState {
    fn empty(kind: BasisKind, b: &Mat, c: &Mat, z: &Mat) -> Self {
        let n = b.nrows();
        Self {
            kind,
            v: Mat::zeros(n, 0),
            at_v: Mat::zeros(n, 0),
            widths: Vec::new(),
            forward: Vec::new(),
            t: Mat::zeros(0, 0),
            b_m: Mat::zeros(0, b.ncols()),
            c_m: Mat::zeros(c.nrows(), 0),
            z_m: Mat::zeros(0, z.ncols()),
            nu: Mat::zeros(n, 0),
            tau: Mat::zeros(0, 0),
            pending: None,
            stagnated: false,
            block_width: c.nrows() + z.ncols(),
            b: b.clone(),
            ct: c.transpose(),
            z: z.clone(),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// Orthonormal basis `V` (n × dim).
    pub fn v(&self) -> &Mat {
        &self.v
    }

    /// `T = Vᵀ A V`.
    pub fn t(&self) -> &Mat {
        &self.t
    }

    pub fn b_m(&self) -> &Mat {
        &self.b_m
    }

    pub fn c_m(&self) -> &Mat {
        &self.c_m
    }

    pub fn z_m(&self) -> &Mat {
        &self.z_m
    }

    pub fn nu(&self) -> &Mat {
        &self.nu
    }

    /// Coupling `τ` (dim × rank ν).
    pub fn tau(&self) -> &Mat {
        &self.tau
    }

    /// Column counts of the blocks in `V`.
    pub fn block_widths(&self) -> &[usize] {
        &self.widths
    }

    /// Nominal block width `p + q`.
    pub fn block_width(&self) -> usize {
        self.block_width
    }

    /// The last expansion produced nothing new: `V` is invariant under `Aᵀ`.
    pub fn stagnated(&self) -> bool {
        self.stagnated
    }

    pub fn pending_width(&self) -> usize {
        self.pending.as_ref().map_or(0, |p| p.q.ncols())
    }

    /// Appends an orthonormal block (already orthogonal to `V`) and updates
    /// the projected matrices incrementally.
    pub(crate) fn push_block(&mut self, q: Mat, at_q: Mat, forward: usize) {
        let k = q.ncols();
        if k == 0 {
            return;
        }
        let d = self.dim();
        let mut t = Mat::zeros(d + k, d + k);
        t.view_mut((0, 0), (d, d)).copy_from(&self.t);
        // Vᵀ A Q = (AᵀV)ᵀ Q and Qᵀ A V = (AᵀQ)ᵀ V
        t.view_mut((0, d), (d, k)).copy_from(&self.at_v.tr_mul(&q));
        t.view_mut((d, 0), (k, d)).copy_from(&at_q.tr_mul(&self.v));
        t.view_mut((d, d), (k, k)).copy_from(&at_q.tr_mul(&q));
        self.t = t;
        self.b_m = vcat(&self.b_m, &q.tr_mul(&self.b));
        self.c_m = hcat(&self.c_m, &self.ct.tr_mul(&q));
        self.z_m = vcat(&self.z_m, &q.tr_mul(&self.z));
        self.v = hcat(&self.v, &q);
        self.at_v = hcat(&self.at_v, &at_q);
        self.widths.push(k);
        self.forward.push(forward);
    }

    /// Moves the pending block into `V`. The coupling is stale until the
    /// next pending block is computed.
    pub(crate) fn absorb(&mut self) {
        if let Some(p) = self.pending.take() {
            self.push_block(p.q, p.at_q, p.forward);
        }
        let n = self.n();
        self.nu = Mat::zeros(n, 0);
        self.tau = Mat::zeros(self.dim(), 0);
    }

    /// Index range of the last block of `V`.
    pub(crate) fn last_block(&self) -> (usize, usize) {
        let w = *self.widths.last().unwrap_or(&0);
        (self.dim() - w, w)
    }

    /// `(I − VVᵀ) Aᵀ V` as `ν τᵀ` from an explicit thin QR. Cost `O(n·dim²)`.
    pub fn coupling_direct(&self) -> (Mat, Mat) {
        let r = &self.at_v - &self.v * self.v.tr_mul(&self.at_v);
        let qr = qr_thin_tol(&r, 1e-12);
        (qr.q, qr.r.transpose())
    }

    /// Uses the explicit coupling when the structured one is unavailable.
    pub(crate) fn set_direct_coupling(&mut self) {
        let (nu, tau) = self.coupling_direct();
        self.nu = nu;
        self.tau = tau;
    }

    /// `‖τᵀ Y‖_F`: the part of `(I − VVᵀ)AᵀV Y` that leaves the space.
    pub fn outer_residual(&self, y: &Mat) -> f64 {
        if self.tau.ncols() == 0 {
            return 0.0;
        }
        self.tau.tr_mul(y).norm()
    }
}

/// `‖AᵀV − V Tᵀ − ν τᵀ‖_F`, computed with fresh products.
pub fn arnoldi_defect(state: &BasisState, op: &dyn LinearOperator) -> f64 {
    if state.dim() == 0 {
        return 0.0;
    }
    let atv = op.apply_transpose(&state.v);
    let mut r = atv - &state.v * state.t.transpose();
    if state.tau.ncols() > 0 {
        r -= &state.nu * state.tau.transpose();
    }
    r.norm()
}

pub(crate) fn check_inputs(op: &dyn LinearOperator, b: &Mat, c: &Mat, z: &Mat) -> Result<()> {
    let n = op.dim();
    if b.nrows() != n || c.ncols() != n || z.nrows() != n {
        return Err(DreError::Dimension(format!(
            "A is {n}x{n} but B is {:?}, C is {:?}, Z is {:?}",
            b.shape(),
            c.shape(),
            z.shape()
        )));
    }
    Ok(())
}

/// `[Cᵀ, Z]`.
pub(crate) fn start_block(c: &Mat, z: &Mat) -> Mat {
    hcat(&c.transpose(), z)
}
