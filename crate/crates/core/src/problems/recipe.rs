use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::generators::{gen_advdiff, gen_nsym3d, gen_sym2d, gen_sym2d_stencil};
use super::mtx::{load_matrix_market, read_dense_matrix_market};
use super::rng::seeded_inputs;
use crate::error::{DreError, Result};
use crate::linalg::dense::Mat;
use crate::linalg::shifted::SolverBackend;
use crate::linalg::operator::SparseOperator;
use crate::problem::DreProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Sym2d,
    /// `sym2d` without the mesh scaling.
    #[serde(rename = "sym2d-stencil")]
    Sym2dStencil,
    Nsym3d,
    Advdiff,
    /// Matrices read from Matrix Market files.
    File,
}

/// Everything needed to rebuild a problem deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRecipe {
    pub name: ProblemKind,
    /// Grid points per side (generated kinds).
    #[serde(default)]
    pub grid: usize,
    /// Rows of `C`.
    #[serde(default = "one")]
    pub p: usize,
    /// Columns of `B`.
    #[serde(default = "one")]
    pub s: usize,
    /// Columns of `Z`.
    #[serde(default = "one")]
    pub q: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_f")]
    pub t_f: f64,
    /// Use CG with IC(0) for symmetric real-shift solves.
    #[serde(default)]
    pub iterative: bool,
    #[serde(default)]
    pub a_file: Option<PathBuf>,
    #[serde(default)]
    pub e_file: Option<PathBuf>,
    #[serde(default)]
    pub b_file: Option<PathBuf>,
    #[serde(default)]
    pub c_file: Option<PathBuf>,
    #[serde(default)]
    pub z_file: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl ProblemRecipe {
    pub fn generated(name: ProblemKind, grid: usize, p: usize, s: usize, q: usize, seed: u64, t_f: f64) -> Self {
        Self {
            name,
            grid,
            p,
            s,
            q,
            seed,
            t_f,
            iterative: false,
            a_file: None,
            e_file: None,
            b_file: None,
            c_file: None,
            z_file: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name != ProblemKind::File && self.grid < 2 {
            return Err(DreError::InvalidArgument(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.name != ProblemKind::File && self.name != ProblemKind::Advdiff && (self.p == 0 || self.s == 0 || self.q == 0) {
            return Err(DreError::InvalidArgument("p, s and q must be at least 1".into()));
        }
        if !(self.t_f > 0.0) {
            return Err(DreError::InvalidArgument(format!("t_f must be positive, got {}", self.t_f)));
        }
        Ok(())
    }

    /// Builds the problem. Generated kinds draw `B`, `C`, `Z` from the seed;
    /// `advdiff` uses `B = Cᵀ = 1/√n` and `Z = 0`.
    pub fn build(&self) -> Result<DreProblem> {
        self.validate()?;
        let backend = if self.iterative { SolverBackend::Pcg } else { SolverBackend::Direct };
        let a = match self.name {
            ProblemKind::Sym2d => gen_sym2d(self.grid),
            ProblemKind::Sym2dStencil => gen_sym2d_stencil(self.grid),
            ProblemKind::Nsym3d => gen_nsym3d(self.grid),
            ProblemKind::Advdiff => gen_advdiff(self.grid),
            ProblemKind::File => {
                let path = self.a_file.as_ref().ok_or_else(|| DreError::InvalidArgument("file problem needs a_file".into()))?;
                load_matrix_market(path)?
            }
        };
        let n = a.nrows();
        let (b, c, z) = match self.name {
            ProblemKind::Advdiff => {
                let w = Mat::from_element(n, 1, 1.0 / (n as f64).sqrt());
                (w.clone(), w.transpose(), Mat::zeros(n, 0))
            }
            ProblemKind::File => {
                let read = |p: &Option<PathBuf>, what: &str| -> Result<Mat> {
                    let p = p.as_ref().ok_or_else(|| DreError::InvalidArgument(format!("file problem needs {what}")))?;
                    read_dense_matrix_market(&std::fs::read_to_string(p)?)
                };
                let z = match &self.z_file {
                    Some(_) => read(&self.z_file, "z_file")?,
                    None => Mat::zeros(n, 0),
                };
                (read(&self.b_file, "b_file")?, read(&self.c_file, "c_file")?, z)
            }
            _ => {
                let inp = seeded_inputs(n, self.p, self.s, self.q, self.seed);
                (inp.b, inp.c, inp.z)
            }
        };
        if let Some(e) = &self.e_file {
            let e = load_matrix_market(e)?;
            let op = crate::linalg::operator::MassTransformOperator::with_backend(a, e, backend)?;
            let (b, c, z) = op.transform_inputs(&b, &c, &z);
            return DreProblem::new(std::sync::Arc::new(op), b, c, z, self.t_f);
        }
        DreProblem::new(std::sync::Arc::new(SparseOperator::with_backend(a, backend)?), b, c, z, self.t_f)
    }
}
