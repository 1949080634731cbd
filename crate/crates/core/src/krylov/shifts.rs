use num_complex::Complex64;

use super::{BasisState, RationalExtras};
use crate::error::Result;
use crate::linalg::dense::Mat;
use crate::linalg::operator::LinearOperator;
use crate::linalg::schur::real_schur;

const POWER_STEPS: usize = 60;
const EDGE_SAMPLES: usize = 100;

/// Spectral magnitude bounds `(s₀⁽¹⁾, s₀⁽²⁾)` by power iteration with `Aᵀ`
/// and `A⁻ᵀ`.
pub fn estimate_bounds(op: &dyn LinearOperator) -> Result<(f64, f64)> {
    let n = op.dim();
    let start = Mat::from_fn(n, 1, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    let hi = power_norm(start.clone(), |x| Ok(op.apply_transpose(x)))?;
    let inv = power_norm(start, |x| op.solve_shifted_real(0.0, x, true))?;
    let lo = if inv > 0.0 { 1.0 / inv } else { hi };
    Ok((lo.min(hi), hi.max(lo)))
}

fn power_norm(mut x: Mat, apply: impl Fn(&Mat) -> Result<Mat>) -> Result<f64> {
    let mut est = 0.0;
    x /= x.norm();
    for _ in 0..POWER_STEPS {
        let y = apply(&x)?;
        est = y.norm();
        if est == 0.0 || !est.is_finite() {
            break;
        }
        x = y / est;
    }
    Ok(est)
}

/// `Σ ln|s − sⱼ| − Σ ln|s + μⱼ|` over used poles `sⱼ` and mirrored Ritz values `μⱼ`.
pub fn shift_objective(s: Complex64, mirrored_ritz: &[Complex64], poles: &[Complex64]) -> f64 {
    let weight = mirrored_ritz.len() as f64 / poles.len().max(1) as f64;
    let num: f64 = weight * poles.iter().map(|p| (s - p).norm().ln()).sum::<f64>();
    let den: f64 = mirrored_ritz.iter().map(|m| (s + m).norm().ln()).sum();
    num - den
}

/// Next pole of the rational space.
///
/// The candidate region is the convex hull of the mirrored Ritz values of
/// `T − B_m B_mᵀ Y(t_f)` and the two bounds; the pole is the boundary point
/// where the current rational skeleton is largest. The first call returns
/// the lower bound.
pub fn next_shift(state: &BasisState, extras: &RationalExtras, y_tf: Option<&Mat>, real_only: bool) -> Result<Complex64> {
    let (lo, hi) = extras.s0;
    if extras.shifts.is_empty() || state.dim() == 0 {
        return Ok(Complex64::new(lo, 0.0));
    }
    let mut closed = state.t.clone();
    if let Some(y) = y_tf {
        if y.nrows() == state.dim() && state.b_m.ncols() > 0 {
            closed -= &state.b_m * state.b_m.tr_mul(y);
        }
    }
    let ritz: Vec<Complex64> = real_schur(&closed)?
        .eigenvalues()
        .into_iter()
        .map(|z| {
            let m = -z;
            Complex64::new(m.re.abs(), if real_only { 0.0 } else { m.im })
        })
        .collect();
    let mut points = ritz.clone();
    points.push(Complex64::new(lo, 0.0));
    points.push(Complex64::new(hi, 0.0));
    let eval = |s: Complex64| shift_objective(s, &ritz, &extras.shifts);
    let hull = convex_hull(&points);
    let best = if hull.len() < 3 {
        let a = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
        let b = points.iter().map(|p| p.re).fold(0.0, f64::max);
        if !(b > a) {
            return Ok(Complex64::new(0.5 * (lo + hi), 0.0));
        }
        maximize_edge(Complex64::new(a, 0.0), Complex64::new(b, 0.0), &eval)
    } else {
        let mut best = (Complex64::new(0.5 * (lo + hi), 0.0), f64::NEG_INFINITY);
        for i in 0..hull.len() {
            let cand = maximize_edge(hull[i], hull[(i + 1) % hull.len()], &eval);
            if cand.1 > best.1 {
                best = cand;
            }
        }
        best
    };
    let mut s = best.0;
    if s.re <= 0.0 {
        s.re = s.re.abs().max(lo);
    }
    if real_only || s.im.abs() <= 1e-10 * s.norm() {
        s.im = 0.0;
    }
    // pick the upper half plane representative of a conjugate pair
    s.im = s.im.abs();
    Ok(s)
}

/// Samples the segment uniformly and geometrically toward both ends, then
/// refines the best sample by golden-section search.
fn maximize_edge(a: Complex64, b: Complex64, f: &impl Fn(Complex64) -> f64) -> (Complex64, f64) {
    let at = |u: f64| a + (b - a) * u;
    let mut us: Vec<f64> = (0..=EDGE_SAMPLES).map(|i| i as f64 / EDGE_SAMPLES as f64).collect();
    for k in 1..=60 {
        let u = 10f64.powf(-(k as f64) / 10.0);
        us.push(u);
        us.push(1.0 - u);
    }
    us.sort_by(f64::total_cmp);
    us.dedup();
    let vals: Vec<f64> = us.iter().map(|&u| f(at(u))).collect();
    let (ib, _) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let (mut l, mut r) = (us[ib.saturating_sub(1)], us[(ib + 1).min(us.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = r - g * (r - l);
    let mut x2 = l + g * (r - l);
    let (mut f1, mut f2) = (f(at(x1)), f(at(x2)));
    for _ in 0..60 {
        if f1 < f2 {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + g * (r - l);
            f2 = f(at(x2));
        } else {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - g * (r - l);
            f1 = f(at(x1));
        }
    }
    let cands = [(us[ib], vals[ib]), (x1, f1), (x2, f2)];
    let (u, v) = cands.iter().cloned().filter(|c| c.1.is_finite()).fold((us[ib], f64::NEG_INFINITY), |acc, c| {
        if c.1 > acc.1 {
            c
        } else {
            acc
        }
    });
    (at(u), v)
}

/// Monotone chain; returns vertices counterclockwise without repeats.
fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<Complex64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
