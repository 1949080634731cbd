use crate::linalg::sparse::CsrMatrix;

/// 5-point Laplacian on the unit square, Dirichlet boundary, `n₀²` unknowns,
/// scaled by `1/h²` with `h = 1/(n₀+1)`. Negative definite.
pub fn gen_sym2d(n0: usize) -> CsrMatrix {
    assert!(n0 >= 2, "grid needs at least 2 points per side");
    let h = 1.0 / (n0 + 1) as f64;
    let s = 1.0 / (h * h);
    stencil2d(n0, |_, _| (-4.0 * s, [s, s, s, s]))
}

/// The same stencil without the `1/h²` factor: diagonal −4, neighbours 1.
pub fn gen_sym2d_stencil(n0: usize) -> CsrMatrix {
    assert!(n0 >= 2, "grid needs at least 2 points per side");
    stencil2d(n0, |_, _| (-4.0, [1.0; 4]))
}

/// `Δw − 10x w_x − 100y w_y` on the unit square, centered differences.
pub fn gen_advdiff(n0: usize) -> CsrMatrix {
    assert!(n0 >= 2, "grid needs at least 2 points per side");
    let h = 1.0 / (n0 + 1) as f64;
    let s = 1.0 / (h * h);
    stencil2d(n0, |x, y| {
        let (cx, cy) = (-10.0 * x / (2.0 * h), -100.0 * y / (2.0 * h));
        // [west, east, south, north]
        (-4.0 * s, [s - cx, s + cx, s - cy, s + cy])
    })
}

fn stencil2d(n0: usize, coeff: impl Fn(f64, f64) -> (f64, [f64; 4])) -> CsrMatrix {
    let h = 1.0 / (n0 + 1) as f64;
    let n = n0 * n0;
    let mut t = Vec::with_capacity(5 * n);
    // unknown (i, j) sits at x = (i+1)h, y = (j+1)h with index j·n₀ + i
    for j in 0..n0 {
        for i in 0..n0 {
            let r = j * n0 + i;
            let (d, [w, e, so, no]) = coeff((i + 1) as f64 * h, (j + 1) as f64 * h);
            t.push((r, r, d));
            if i > 0 {
                t.push((r, r - 1, w));
            }
            if i + 1 < n0 {
                t.push((r, r + 1, e));
            }
            if j > 0 {
                t.push((r, r - n0, so));
            }
            if j + 1 < n0 {
                t.push((r, r + n0, no));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("stencil indices in range")
}

/// Coefficient functions of a 3D operator
/// `(a u_x)_x + (b u_y)_y + (c u_z)_z + f u_x + g u_y + k u_z`.
pub struct Nsym3dCoefficients {
    pub a: fn(f64, f64, f64) -> f64,
    pub b: fn(f64, f64, f64) -> f64,
    pub c: fn(f64, f64, f64) -> f64,
    pub f: fn(f64, f64, f64) -> f64,
    pub g: fn(f64, f64, f64) -> f64,
    pub k: fn(f64, f64, f64) -> f64,
}

impl Nsym3dCoefficients {
    pub fn standard() -> Self {
        Self {
            a: |x, y, _| (x * y).exp(),
            b: |x, y, _| (x * y).exp(),
            c: |_, _, _| 1.0,
            f: |x, _, _| (1.0 + x) * (-x).exp(),
            g: |_, y, _| y * y,
            k: |x, y, _| 10.0 * (x + y),
        }
    }

    pub fn laplacian() -> Self {
        Self { a: |_, _, _| 1.0, b: |_, _, _| 1.0, c: |_, _, _| 1.0, f: |_, _, _| 0.0, g: |_, _, _| 0.0, k: |_, _, _| 0.0 }
    }
}

/// Nonsymmetric 3D convection-diffusion operator on the unit cube with
/// Dirichlet boundary; `n₀³` unknowns.
pub fn gen_nsym3d(n0: usize) -> CsrMatrix {
    gen_nsym3d_with(n0, &Nsym3dCoefficients::standard())
}

/// Diffusion coefficients are sampled at cell interfaces (midpoints);
/// first derivatives use centered differences.
pub fn gen_nsym3d_with(n0: usize, co: &Nsym3dCoefficients) -> CsrMatrix {
    assert!(n0 >= 2, "grid needs at least 2 points per side");
    let h = 1.0 / (n0 + 1) as f64;
    let (h2, h2c) = (h * h, 2.0 * h);
    let n = n0 * n0 * n0;
    let idx = |i: usize, j: usize, k: usize| (k * n0 + j) * n0 + i;
    let mut t = Vec::with_capacity(7 * n);
    for k in 0..n0 {
        for j in 0..n0 {
            for i in 0..n0 {
                let (x, y, z) = ((i + 1) as f64 * h, (j + 1) as f64 * h, (k + 1) as f64 * h);
                let r = idx(i, j, k);
                let (axm, axp) = ((co.a)(x - h / 2.0, y, z), (co.a)(x + h / 2.0, y, z));
                let (bym, byp) = ((co.b)(x, y - h / 2.0, z), (co.b)(x, y + h / 2.0, z));
                let (czm, czp) = ((co.c)(x, y, z - h / 2.0), (co.c)(x, y, z + h / 2.0));
                let (f, g, kk) = ((co.f)(x, y, z), (co.g)(x, y, z), (co.k)(x, y, z));
                t.push((r, r, -(axm + axp + bym + byp + czm + czp) / h2));
                let nbrs = [
                    (i > 0, axm / h2 - f / h2c, (i.wrapping_sub(1), j, k)),
                    (i + 1 < n0, axp / h2 + f / h2c, (i + 1, j, k)),
                    (j > 0, bym / h2 - g / h2c, (i, j.wrapping_sub(1), k)),
                    (j + 1 < n0, byp / h2 + g / h2c, (i, j + 1, k)),
                    (k > 0, czm / h2 - kk / h2c, (i, j, k.wrapping_sub(1))),
                    (k + 1 < n0, czp / h2 + kk / h2c, (i, j, k + 1)),
                ];
                for (inside, v, (a, b, c)) in nbrs {
                    if inside {
                        t.push((r, idx(a, b, c), v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("stencil indices in range")
}
