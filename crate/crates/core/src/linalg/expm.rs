use super::dense::Mat;
use crate::error::{DreError, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &Mat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DreError::Dimension("expm needs a square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(DreError::NonFinite("expm input"));
    }
    let nrm = norm1(m);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m * 0.5f64.powi(s);
    let b = &PADE13;
    let id = Mat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let lu = (&v - &u).lu();
    let mut r = lu.solve(&(&v + &u)).ok_or(DreError::Overflow)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(DreError::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gives_identity() {
        let e = expm(&Mat::zeros(3, 3)).unwrap();
        assert_eq!(e, Mat::identity(3, 3));
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let m = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 0.5, -30.0]));
        let e = expm(&m).unwrap();
        for (i, x) in [-1.0f64, 0.5, -30.0].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() <= 1e-14 * x.exp().max(1.0));
        }
    }

    #[test]
    fn huge_norm_overflows() {
        let m = Mat::from_element(2, 2, 1e6);
        assert!(matches!(expm(&m), Err(DreError::Overflow)));
    }
}
