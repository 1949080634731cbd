use std::sync::Arc;

use crate::error::Result;
use crate::linalg::dense::Mat;
use crate::linalg::operator::MassTransformOperator;
use crate::linalg::sparse::CsrMatrix;
use crate::problem::DreProblem;

/// Standard-form problem for `Êᵀ Ẋ Ê = ÂᵀX̂Ê + ÊᵀX̂Â − ÊᵀX̂B̂B̂ᵀX̂Ê + ĈᵀĈ`
/// with `Ê = E_L E_Lᵀ`: `A = E_L⁻¹ÂE_L⁻ᵀ`, `B = E_L⁻¹B̂`, `C = ĈE_L⁻ᵀ`, `Z = E_LᵀẐ`.
pub fn apply_mass_transform(a_hat: CsrMatrix, b_hat: &Mat, c_hat: &Mat, e_hat: CsrMatrix, z_hat: &Mat, t_f: f64) -> Result<DreProblem> {
    let op = MassTransformOperator::new(a_hat, e_hat)?;
    let (b, c, z) = op.transform_inputs(b_hat, c_hat, z_hat);
    DreProblem::new(Arc::new(op), b, c, z, t_f)
}
