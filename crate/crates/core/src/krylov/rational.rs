use num_complex::Complex64;

use super::{check_inputs, start_block, BasisKind, BasisState, Pending};
use crate::error::Result;
use crate::linalg::dense::{block_orthogonalize, hcat, qr_thin, qr_thin_tol, split_complex, to_complex, Mat};
use crate::linalg::operator::LinearOperator;

/// Shift history and orthogonalization coefficients of a rational basis.
#[derive(Debug, Clone)]
pub struct RationalExtras {
    /// Every pole used so far; a complex shift is followed by its conjugate.
    pub shifts: Vec<Complex64>,
    /// Coefficients `H̃` with `W = [V, P] H̃` for all solved blocks `W`.
    pub h: Mat,
    /// Column ranges of the `W` groups in `H̃`.
    groups: Vec<(usize, usize)>,
    /// Triangular factor of the last group on the pending block.
    pub r_last: Mat,
    /// Triangular factor `Γ` of the QR that produced `ν`.
    pub gamma: Mat,
    /// Lower and upper spectral bounds for shift selection.
    pub s0: (f64, f64),
    /// The last coupling came from the explicit fallback.
    pub used_fallback: bool,
}

impl RationalExtras {
    pub fn new(s0: (f64, f64)) -> Self {
        Self {
            shifts: Vec::new(),
            h: Mat::zeros(0, 0),
            groups: Vec::new(),
            r_last: Mat::zeros(0, 0),
            gamma: Mat::zeros(0, 0),
            s0,
            used_fallback: false,
        }
    }

    /// Appends a column group with coefficient rows for all current vectors.
    fn push_group(&mut self, coeffs: &Mat) {
        let (rows, cols) = self.h.shape();
        let new_rows = coeffs.nrows().max(rows);
        let mut h = Mat::zeros(new_rows, cols + coeffs.ncols());
        h.view_mut((0, 0), (rows, cols)).copy_from(&self.h);
        h.view_mut((0, cols), coeffs.shape()).copy_from(coeffs);
        self.groups.push((cols, coeffs.ncols()));
        self.h = h;
    }
}

/// `V₁ = orth([Cᵀ, Z])`; no pending block yet.
pub fn init_rational(op: &dyn LinearOperator, b: &Mat, c: &Mat, z: &Mat) -> Result<BasisState> {
    check_inputs(op, b, c, z)?;
    let mut state = BasisState::empty(BasisKind::Rational, b, c, z);
    let q = qr_thin(&start_block(c, z)).q;
    if q.ncols() < state.block_width {
        log::warn!("starting block is rank deficient: kept {} of {} columns", q.ncols(), state.block_width);
    }
    if q.ncols() == 0 {
        state.stagnated = true;
        return Ok(state);
    }
    let at_q = op.apply_transpose(&q);
    state.push_block(q, at_q, 0);
    state.absorb();
    Ok(state)
}

/// Absorbs the pending block and solves `(Aᵀ − sI) W = V_last`.
///
/// A real shift yields one new pending block. A complex shift yields the
/// real part, which joins `V` at once, and the imaginary part, which
/// becomes pending; the conjugate shift is recorded as used.
pub fn rksm_expand(state: &mut BasisState, extras: &mut RationalExtras, op: &dyn LinearOperator, shift: Complex64) -> Result<()> {
    state.absorb();
    if state.stagnated || state.dim() == 0 {
        return Ok(());
    }
    if extras.h.nrows() == 0 {
        extras.h = Mat::zeros(state.dim(), 0);
    }
    let (start, width) = state.last_block();
    let src = state.v.columns(start, width).into_owned();
    let real = shift.im == 0.0;
    let (wr, wc) = if real {
        (op.solve_shifted_real(shift.re, &src, true)?, None)
    } else {
        let w = op.solve_shifted(shift, &to_complex(&src), true)?;
        let (re, im) = split_complex(&w);
        (re, Some(im))
    };
    extras.shifts.push(shift);
    if !real {
        extras.shifts.push(shift.conj());
    }
    let o = block_orthogonalize(&state.v, &wr);
    let d0 = state.dim();
    let mut coeffs = Mat::zeros(d0 + o.rank(), width);
    coeffs.view_mut((0, 0), (d0, width)).copy_from(&o.h);
    coeffs.view_mut((d0, 0), o.r.shape()).copy_from(&o.r);
    extras.push_group(&coeffs);
    let (p, r) = match wc {
        None => (o.q, o.r),
        Some(wc) => {
            // the real part joins the basis now
            if o.rank() > 0 {
                let at_q = op.apply_transpose(&o.q);
                state.push_block(o.q, at_q, 0);
            }
            let oc = block_orthogonalize(&state.v, &wc);
            let d1 = state.dim();
            let mut coeffs = Mat::zeros(d1 + oc.rank(), width);
            coeffs.view_mut((0, 0), (d1, width)).copy_from(&oc.h);
            coeffs.view_mut((d1, 0), oc.r.shape()).copy_from(&oc.r);
            extras.push_group(&coeffs);
            (oc.q, oc.r)
        }
    };
    if p.ncols() == 0 {
        state.stagnated = true;
        state.nu = Mat::zeros(state.n(), 0);
        state.tau = Mat::zeros(state.dim(), 0);
        extras.r_last = Mat::zeros(0, width);
        return Ok(());
    }
    let at_p = op.apply_transpose(&p);
    extras.r_last = r;
    state.pending = Some(Pending { q: p, at_q: at_p, forward: 0 });
    if !structured_coupling(state, extras, shift) {
        extras.used_fallback = true;
        state.set_direct_coupling();
    } else {
        extras.used_fallback = false;
    }
    Ok(())
}

/// Coupling from the orthogonalization coefficients:
/// `(I − Π)Aᵀ𝒱 = [Pσ − (I − Π)AᵀP, P] [r Eₘᵀ Hₘ⁻¹; −ω r Eₘ₋₁ᵀ Hₘ⁻¹]`.
/// Returns false when `Hₘ` is not square or is numerically singular.
fn structured_coupling(state: &mut BasisState, extras: &mut RationalExtras, shift: Complex64) -> bool {
    let d = state.dim();
    let pend = state.pending.as_ref().expect("pending block present");
    let (hr, hc) = extras.h.shape();
    if hr != d + pend.q.ncols() || hc != d {
        return false;
    }
    let hm = extras.h.view((0, 0), (d, d)).into_owned();
    let lu = hm.transpose().lu();
    // E-selectors of the last one or two groups
    let solve_group = |g: (usize, usize)| -> Option<Mat> {
        let mut e = Mat::zeros(d, g.1);
        for j in 0..g.1 {
            e[(g.0 + j, j)] = 1.0;
        }
        // Hₘ⁻ᵀ E, transposed: rows of Hₘ⁻¹
        lu.solve(&e).map(|y| y.transpose())
    };
    let last = *extras.groups.last().expect("a group was pushed");
    let Some(x1) = solve_group(last) else { return false };
    let x1 = &extras.r_last * x1;
    let hnorm = hm.norm();
    if !x1.iter().all(|v| v.is_finite()) || x1.norm() * hnorm > 1e14 * extras.r_last.norm().max(f64::MIN_POSITIVE) {
        return false;
    }
    let p = &pend.q;
    let m_p = &pend.at_q - &state.v * state.v.tr_mul(&pend.at_q);
    let lead = p * shift.re - m_p;
    let (u, x) = if shift.im == 0.0 {
        (lead, x1)
    } else {
        let prev = extras.groups[extras.groups.len() - 2];
        let Some(x2) = solve_group(prev) else { return false };
        let x2 = &extras.r_last * x2 * (-shift.im);
        (hcat(&lead, p), crate::linalg::dense::vcat(&x1, &x2))
    };
    let qr = qr_thin_tol(&u, 1e-13);
    let taut = &qr.r * x;
    extras.gamma = qr.r;
    state.nu = qr.q;
    state.tau = taut.transpose();
    true
}
