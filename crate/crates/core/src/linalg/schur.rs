use num_complex::Complex64;

use super::dense::Mat;
use crate::error::{DreError, Result};

/// Real Schur form `M = Q T Qᵀ` with `T` quasi-upper-triangular.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub q: Mat,
    pub t: Mat,
}

impl RealSchur {
    /// Diagonal blocks of `T` as `(start, size)` with size 1 or 2.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        diagonal_blocks(&self.t)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let t = &self.t;
        let mut out = Vec::with_capacity(t.nrows());
        for (i, size) in self.blocks() {
            if size == 1 {
                out.push(Complex64::new(t[(i, i)], 0.0));
            } else {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let mid = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    out.push(Complex64::new(mid + s, 0.0));
                    out.push(Complex64::new(mid - s, 0.0));
                } else {
                    let s = (-disc).sqrt();
                    out.push(Complex64::new(mid, s));
                    out.push(Complex64::new(mid, -s));
                }
            }
        }
        out
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn diagonal_blocks(t: &Mat) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            out.push((i, 2));
            i += 2;
        } else {
            out.push((i, 1));
            i += 1;
        }
    }
    out
}

/// Householder vector for `x`: returns `(v, beta)` with `(I - beta v vᵀ) x = alpha e1`.
fn householder(x: &[f64]) -> (Vec<f64>, f64) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = x.to_vec();
    if norm == 0.0 {
        return (v, 0.0);
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    v[0] -= alpha;
    let vtv: f64 = v.iter().map(|a| a * a).sum();
    if vtv == 0.0 {
        return (v, 0.0);
    }
    (v, 2.0 / vtv)
}

fn apply_left(h: &mut Mat, v: &[f64], beta: f64, r0: usize, c0: usize, c1: usize) {
    if beta == 0.0 {
        return;
    }
    for j in c0..c1 {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * h[(r0 + k, j)];
        }
        s *= beta;
        for (k, vk) in v.iter().enumerate() {
            h[(r0 + k, j)] -= s * vk;
        }
    }
}

fn apply_right(h: &mut Mat, v: &[f64], beta: f64, c0: usize, r0: usize, r1: usize) {
    if beta == 0.0 {
        return;
    }
    for i in r0..r1 {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += h[(i, c0 + k)] * vk;
        }
        s *= beta;
        for (k, vk) in v.iter().enumerate() {
            h[(i, c0 + k)] -= s * vk;
        }
    }
}

/// Householder reduction to upper Hessenberg form, `M = Q H Qᵀ`.
pub fn hessenberg(m: &Mat) -> (Mat, Mat) {
    let n = m.nrows();
    let mut h = m.clone();
    let mut q = Mat::identity(n, n);
    if n < 3 {
        return (q, h);
    }
    for k in 0..n - 2 {
        let x: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let (v, beta) = householder(&x);
        apply_left(&mut h, &v, beta, k + 1, k, n);
        apply_right(&mut h, &v, beta, k + 1, 0, n);
        apply_right(&mut q, &v, beta, k + 1, 0, n);
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    (q, h)
}

/// Real Schur decomposition by Hessenberg reduction and Francis double-shift QR.
pub fn real_schur(m: &Mat) -> Result<RealSchur> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DreError::Dimension(format!("real_schur needs a square matrix, got {}x{}", n, m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(DreError::NonFinite("real_schur input"));
    }
    let (mut q, mut h) = hessenberg(m);
    if n == 0 {
        return Ok(RealSchur { q, t: h });
    }
    let norm = h.norm().max(f64::MIN_POSITIVE);
    let max_sweeps = 100 * n.max(10);
    let mut sweeps = 0usize;
    let mut iter = 0usize;
    let mut iu = n as isize - 1;
    while iu >= 0 {
        let u = iu as usize;
        let mut l = u;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < f64::EPSILON * s {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }
        if l == u {
            iu -= 1;
            iter = 0;
            continue;
        }
        if l + 1 == u {
            standardize_2x2(&mut h, &mut q, u - 1);
            iu -= 2;
            iter = 0;
            continue;
        }
        iter += 1;
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(DreError::SchurNoConvergence(max_sweeps));
        }
        francis_step(&mut h, &mut q, l, u, iter);
    }
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = 0.0;
        }
    }
    Ok(RealSchur { q, t: h })
}

/// Shift pair `(r1, i1, r2, i2)` from the 2x2 block `[[a, b], [c, d]]`. Real
/// eigenvalues are replaced by the one closer to `d`, used twice.
fn shift_pair(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64, f64) {
    let s = a.abs() + b.abs() + c.abs() + d.abs();
    if s == 0.0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let (a, b, c, d) = (a / s, b / s, c / s, d / s);
    let tr = 0.5 * (a + d);
    let det = (a - tr) * (d - tr) - b * c;
    let root = det.abs().sqrt();
    if det >= 0.0 {
        (tr * s, root * s, tr * s, -root * s)
    } else {
        let (r1, r2) = (tr + root, tr - root);
        let r = if (r1 - d).abs() <= (r2 - d).abs() { r1 } else { r2 };
        (r * s, 0.0, r * s, 0.0)
    }
}

fn francis_step(h: &mut Mat, q: &mut Mat, l: usize, m: usize, iter: usize) {
    let n = h.nrows();
    let (r1, i1, r2, i2) = if iter % 10 == 0 {
        // exceptional shift
        let e = h[(m, m - 1)].abs() + h[(m - 1, m - 2)].abs();
        let a = 0.75 * e + h[(m, m)];
        shift_pair(a, -0.4375 * e, e, a)
    } else {
        shift_pair(h[(m - 1, m - 1)], h[(m - 1, m)], h[(m, m - 1)], h[(m, m)])
    };
    // first column of (H - r1)(H - r2), formed from differences to avoid cancellation
    let scale = (h[(l, l)] - r2).abs() + i2.abs() + h[(l + 1, l)].abs();
    let scale = if scale == 0.0 { 1.0 } else { scale };
    let h21 = h[(l + 1, l)] / scale;
    let mut x = h21 * h[(l, l + 1)] + (h[(l, l)] - r1) * ((h[(l, l)] - r2) / scale) - i1 * (i2 / scale);
    let mut y = h21 * (h[(l, l)] + h[(l + 1, l + 1)] - r1 - r2);
    let mut z = h21 * h[(l + 2, l + 1)];
    for k in l..=m - 2 {
        let (v, beta) = householder(&[x, y, z]);
        let c0 = if k > l { k - 1 } else { l };
        apply_left(h, &v, beta, k, c0, n);
        let r1 = (k + 4).min(m + 1);
        apply_right(h, &v, beta, k, 0, r1);
        apply_right(q, &v, beta, k, 0, n);
        if k > l {
            h[(k + 1, k - 1)] = 0.0;
            h[(k + 2, k - 1)] = 0.0;
        }
        x = h[(k + 1, k)];
        y = h[(k + 2, k)];
        if k + 3 <= m {
            z = h[(k + 3, k)];
        }
    }
    let (v, beta) = householder(&[x, y]);
    apply_left(h, &v, beta, m - 1, m - 2, n);
    apply_right(h, &v, beta, m - 1, 0, m + 1);
    apply_right(q, &v, beta, m - 1, 0, n);
    h[(m, m - 2)] = 0.0;
}

/// Triangularizes a 2x2 diagonal block at `p` when its eigenvalues are real.
fn standardize_2x2(h: &mut Mat, q: &mut Mat, p: usize) {
    let n = h.nrows();
    let (a, b, c, d) = (h[(p, p)], h[(p, p + 1)], h[(p + 1, p)], h[(p + 1, p + 1)]);
    if c == 0.0 {
        return;
    }
    let half = 0.5 * (a - d);
    let disc = half * half + b * c;
    if disc < 0.0 {
        return;
    }
    let root = disc.sqrt();
    let lambda = 0.5 * (a + d) + if half >= 0.0 { root } else { -root };
    // eigenvector of [[a, b], [c, d]] for lambda
    let (v1, v2) = {
        let e1 = (lambda - d, c);
        let e2 = (b, lambda - a);
        if e1.0.hypot(e1.1) >= e2.0.hypot(e2.1) {
            e1
        } else {
            e2
        }
    };
    let r = v1.hypot(v2);
    if r == 0.0 {
        return;
    }
    let (cs, sn) = (v1 / r, v2 / r);
    // H <- Gᵀ H G with G = [[cs, -sn], [sn, cs]]
    for j in p..n {
        let (x, y) = (h[(p, j)], h[(p + 1, j)]);
        h[(p, j)] = cs * x + sn * y;
        h[(p + 1, j)] = -sn * x + cs * y;
    }
    for i in 0..=p + 1 {
        let (x, y) = (h[(i, p)], h[(i, p + 1)]);
        h[(i, p)] = cs * x + sn * y;
        h[(i, p + 1)] = -sn * x + cs * y;
    }
    for i in 0..n {
        let (x, y) = (q[(i, p)], q[(i, p + 1)]);
        q[(i, p)] = cs * x + sn * y;
        q[(i, p + 1)] = -sn * x + cs * y;
    }
    h[(p + 1, p)] = 0.0;
}
