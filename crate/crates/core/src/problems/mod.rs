//! Test problems, Matrix Market I/O and seeded inputs.

mod generators;
mod mass;
mod mtx;
mod recipe;
mod rng;

pub use generators::{gen_advdiff, gen_nsym3d, gen_nsym3d_with, gen_sym2d, gen_sym2d_stencil, Nsym3dCoefficients};
pub use mass::apply_mass_transform;
pub use mtx::{load_matrix_market, read_dense_matrix_market, read_matrix_market, write_dense_matrix_market, write_matrix_market};
pub use recipe::{ProblemKind, ProblemRecipe};
pub use rng::{seeded_inputs, standard_normals, SeededInputs};
