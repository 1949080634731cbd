//! Result directory layout:
//!
//! - `basis.mtx`: the `n × m` basis `V`.
//! - `factor_NNNN.mtx`: small `m × r_j` factor `F_j` with `X(t_j) ≈ (V F_j)(V F_j)ᵀ`.
//! - `index.csv`: `instant,time,rank,file`, one row per factor.
//! - `history.csv`: `iteration,basis_dim,backward_error,wall_seconds,phase`.
//! - `summary.toml`: sizes, ranks and timings read back by `dre report`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use dre_core::problems::write_dense_matrix_market;
use dre_core::{BasisKind, IterationRecord, SolveResult};
use serde::{Deserialize, Serialize};

pub const HISTORY: &str = "history.csv";
pub const INDEX: &str = "index.csv";
pub const SUMMARY: &str = "summary.toml";
pub const BASIS: &str = "basis.mtx";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub basis_dim: usize,
    /// Empty on iterations that skipped the residual check.
    pub backward_error: Option<f64>,
    pub wall_seconds: f64,
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub instant: usize,
    pub time: f64,
    pub rank: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub n: usize,
    /// Number of length-`n` vectors stored, the basis width.
    pub vecs: usize,
    pub min_rank: usize,
    pub max_rank: usize,
    pub instants: usize,
    pub converged: bool,
    pub backward_error: f64,
    pub reduction_seconds: f64,
    pub refinement_seconds: f64,
    pub total_seconds: f64,
}

/// One row per outer iteration plus a closing `refinement` row. That row repeats
/// the stopping estimate, which lives on the reduction grid.
pub fn history_rows(history: &[IterationRecord], result: &SolveResult) -> Vec<HistoryRow> {
    let mut rows: Vec<HistoryRow> = history
        .iter()
        .map(|r| HistoryRow {
            iteration: r.iteration,
            basis_dim: r.basis_dim,
            backward_error: r.estimate.map(|e| e.backward_error),
            wall_seconds: r.wall_seconds,
            phase: "reduction".into(),
        })
        .collect();
    rows.push(HistoryRow {
        iteration: history.last().map_or(0, |r| r.iteration),
        basis_dim: result.state.dim(),
        backward_error: Some(result.estimate.backward_error),
        wall_seconds: result.reduction_seconds + result.refinement_seconds,
        phase: "refinement".into(),
    });
    rows
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>().with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows)
}

/// Writes the basis, factors, index, history and summary into `dir`.
pub fn write_result(dir: &Path, kind: BasisKind, result: &SolveResult, rows: &[HistoryRow], total_seconds: f64) -> anyhow::Result<Summary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_dense_matrix_market(dir.join(BASIS), result.basis())?;
    let times = result.times();
    let mut index = Vec::with_capacity(result.factors.len());
    for (j, f) in result.factors.iter().enumerate() {
        let file = format!("factor_{j:04}.mtx");
        write_dense_matrix_market(dir.join(&file), f)?;
        index.push(IndexRow { instant: j, time: times[j], rank: f.ncols(), file });
    }
    write_csv(&dir.join(INDEX), &index)?;
    write_csv(&dir.join(HISTORY), rows)?;
    let summary = Summary {
        method: kind.label().into(),
        n: result.state.n(),
        vecs: result.state.dim(),
        min_rank: result.min_rank(),
        max_rank: result.max_rank(),
        instants: index.len(),
        converged: result.converged,
        backward_error: result.estimate.backward_error,
        reduction_seconds: result.reduction_seconds,
        refinement_seconds: result.refinement_seconds,
        total_seconds,
    };
    fs::write(dir.join(SUMMARY), toml::to_string(&summary)?)?;
    Ok(summary)
}

/// Loads the summary and checks that every indexed file is present.
pub fn load_result(dir: &Path) -> anyhow::Result<(Summary, Vec<IndexRow>)> {
    let path = dir.join(SUMMARY);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary: Summary = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let index: Vec<IndexRow> = read_csv(&dir.join(INDEX))?;
    for f in std::iter::once(BASIS).chain(index.iter().map(|r| r.file.as_str())) {
        if !dir.join(f).is_file() {
            bail!("missing result file {}", dir.join(f).display());
        }
    }
    if index.len() != summary.instants {
        bail!("index lists {} instants, summary says {}", index.len(), summary.instants);
    }
    Ok((summary, index))
}
