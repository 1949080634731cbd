//! Portable normal samples: ChaCha8 stream, uniform doubles in [0, 1),
//! Box–Muller pairs with `libm` transcendental functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::dense::Mat;

/// `count` standard normal samples for `seed`.
pub fn standard_normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let th = 2.0 * std::f64::consts::PI * u2;
        out.push(r * libm::cos(th));
        out.push(r * libm::sin(th));
    }
    out.truncate(count);
    out
}

#[derive(Debug, Clone)]
pub struct SeededInputs {
    /// n × s
    pub b: Mat,
    /// p × n
    pub c: Mat,
    /// n × q
    pub z: Mat,
}

/// Normal `B`, `C`, `Z` drawn in that order, each filled column-major.
pub fn seeded_inputs(n: usize, p: usize, s: usize, q: usize, seed: u64) -> SeededInputs {
    let xs = standard_normals(seed, n * (s + p + q));
    let (bs, rest) = xs.split_at(n * s);
    let (cs, zs) = rest.split_at(p * n);
    SeededInputs {
        b: Mat::from_column_slice(n, s, bs),
        c: Mat::from_column_slice(p, n, cs),
        z: Mat::from_column_slice(n, q, zs),
    }
}
