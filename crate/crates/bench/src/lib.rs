//! Shared inputs for the benches.

use dre_core::problems::standard_normals;
use dre_core::Mat;

/// Dense stable matrix: negative definite symmetric part plus a skew term.
pub fn stable_dense(n: usize, seed: u64) -> Mat {
    let g = standard_normals(seed, 2 * n * n);
    let m = Mat::from_column_slice(n, n, &g[..n * n]);
    let s = Mat::from_column_slice(n, n, &g[n * n..]);
    -(&m * m.transpose()) / n as f64 - Mat::identity(n, n) + (&s - s.transpose()) * 0.5
}

pub fn normals(rows: usize, cols: usize, seed: u64) -> Mat {
    Mat::from_column_slice(rows, cols, &standard_normals(seed, rows * cols))
}
