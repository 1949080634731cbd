use super::{check_inputs, start_block, BasisKind, BasisState, Pending};
use crate::error::Result;
use crate::linalg::dense::{block_orthogonalize, hcat, qr_thin, Mat};
use crate::linalg::operator::LinearOperator;

/// `V₁ = orth([N, A⁻ᵀN])` with `N = [Cᵀ, Z]`; no pending block yet.
pub fn init_extended(op: &dyn LinearOperator, b: &Mat, c: &Mat, z: &Mat) -> Result<BasisState> {
    check_inputs(op, b, c, z)?;
    let mut state = BasisState::empty(BasisKind::Extended, b, c, z);
    let qa = qr_thin(&start_block(c, z)).q;
    if qa.ncols() < state.block_width {
        log::warn!("starting block is rank deficient: kept {} of {} columns", qa.ncols(), state.block_width);
    }
    if qa.ncols() == 0 {
        state.stagnated = true;
        return Ok(state);
    }
    let inv = op.solve_shifted_real(0.0, &qa, true)?;
    let qb = block_orthogonalize(&qa, &inv).q;
    let forward = qa.ncols();
    let q = hcat(&qa, &qb);
    let at_q = op.apply_transpose(&q);
    state.push_block(q, at_q, forward);
    state.absorb();
    Ok(state)
}

/// Absorbs the pending block, then builds the next one from `Aᵀ` applied to
/// the forward part and `A⁻ᵀ` applied to the inverse part of the last block.
pub fn eksm_expand(state: &mut BasisState, op: &dyn LinearOperator) -> Result<()> {
    state.absorb();
    if state.stagnated || state.dim() == 0 {
        return Ok(());
    }
    let (start, width) = state.last_block();
    let fwd = *state.forward.last().unwrap_or(&0);
    let w1 = state.at_v.columns(start, fwd).into_owned();
    let o1 = block_orthogonalize(&state.v, &w1);
    let inv_part = state.v.columns(start + fwd, width - fwd).into_owned();
    let q2 = if inv_part.ncols() > 0 {
        let w2 = op.solve_shifted_real(0.0, &inv_part, true)?;
        block_orthogonalize(&hcat(&state.v, &o1.q), &w2).q
    } else {
        Mat::zeros(state.n(), 0)
    };
    let forward = o1.q.ncols();
    let q = hcat(&o1.q, &q2);
    if q.ncols() == 0 {
        state.stagnated = true;
        return Ok(());
    }
    let at_q = op.apply_transpose(&q);
    // Aᵀ V ⊂ span[V, P], so τᵀ = Pᵀ Aᵀ V
    state.tau = state.at_v.tr_mul(&q);
    state.nu = q.clone();
    state.pending = Some(Pending { q, at_q, forward });
    Ok(())
}
