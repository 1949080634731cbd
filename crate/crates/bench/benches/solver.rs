use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dre_core::{solve_dre, BasisKind, ProblemKind, ProblemRecipe, SolverConfig};

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_dre");
    g.sample_size(10);
    for (name, grid) in [(ProblemKind::Sym2d, 20), (ProblemKind::Nsym3d, 8)] {
        let problem = ProblemRecipe::generated(name, grid, 2, 1, 1, 5, 1.0).build().unwrap();
        for kind in [BasisKind::Rational, BasisKind::Extended] {
            let config = SolverConfig { kind, ..Default::default() };
            let id = BenchmarkId::new(kind.label(), format!("{name:?}-{}", problem.n()).to_lowercase());
            g.bench_function(id, |bn| bn.iter(|| solve_dre(&problem, &config).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, solve);
criterion_main!(benches);
