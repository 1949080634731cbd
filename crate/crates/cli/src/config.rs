use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dre_core::{BasisKind, BdfScheme, ProblemRecipe, SolverConfig};
use serde::Deserialize;

/// Parsed run file. Only `[problem]` is required.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemRecipe,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Option<String>,
    pub tol: Option<f64>,
    /// Steps of the reduction-phase integrator.
    pub timesteps: Option<usize>,
    /// Reduction-phase BDF order, 1 unless given.
    pub reduction_order: Option<usize>,
    pub refine: Option<String>,
    pub max_dim: Option<usize>,
    pub rank_tol: Option<f64>,
    #[serde(default)]
    pub real_shifts_only: bool,
    pub residual_check_period: Option<usize>,
    /// Spectral interval `[lo, hi]` for rational shifts.
    pub shift_bounds: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Values given on the command line win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<BasisKind>,
    pub tol: Option<f64>,
    pub timesteps: Option<usize>,
    pub refine: Option<BdfScheme>,
    pub max_dim: Option<usize>,
    pub out: Option<PathBuf>,
    pub real_shifts_only: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // matrix paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.problem;
        for f in [&mut p.a_file, &mut p.e_file, &mut p.b_file, &mut p.c_file, &mut p.z_file].into_iter().flatten() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if let Some(dir) = &mut cfg.output.dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn solver_config(&self, ov: &Overrides) -> anyhow::Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::default();
        if let Some(m) = &s.method {
            cfg.kind = m.parse()?;
        }
        if let Some(k) = ov.method {
            cfg.kind = k;
        }
        if let Some(t) = ov.tol.or(s.tol) {
            cfg.tol = t;
        }
        let order = s.reduction_order.unwrap_or(cfg.reduction.order);
        let steps = ov.timesteps.or(s.timesteps).unwrap_or(cfg.reduction.steps);
        cfg.reduction = BdfScheme::new(order, steps)?;
        if let Some(r) = &s.refine {
            cfg.refinement = BdfScheme::parse(r)?;
        }
        if let Some(r) = &ov.refine {
            cfg.refinement = r.clone();
        }
        if let Some(d) = ov.max_dim.or(s.max_dim) {
            cfg.max_dim = d;
        }
        if let Some(r) = s.rank_tol {
            cfg.rank_tol = r;
        }
        cfg.real_shifts_only = s.real_shifts_only || ov.real_shifts_only;
        if let Some(p) = s.residual_check_period {
            cfg.residual_check_period = p;
        }
        cfg.shift_bounds = s.shift_bounds.map(|[lo, hi]| (lo, hi));
        Ok(cfg)
    }

    pub fn out_dir(&self, ov: &Overrides) -> anyhow::Result<PathBuf> {
        match ov.out.clone().or_else(|| self.output.dir.clone()) {
            Some(d) => Ok(d),
            None => bail!("no output directory: pass --out or set [output] dir"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let cfg = parse("[problem]\nname = \"sym2d\"\ngrid = 5\n[solver]\nmethod = \"eksm\"\ntol = 1e-5\ntimesteps = 20\n");
        let ov = Overrides { method: Some(BasisKind::Rational), timesteps: Some(30), ..Default::default() };
        let s = cfg.solver_config(&ov).unwrap();
        assert_eq!(s.kind, BasisKind::Rational);
        assert_eq!(s.tol, 1e-5);
        assert_eq!(s.reduction, BdfScheme::new(1, 30).unwrap());
        assert_eq!(s.refinement, BdfScheme::new(2, 100).unwrap());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[problem]\nname = \"sym2d\"\ngrid = 5\n[solver]\ntolerance = 1\n").is_err());
    }
}
