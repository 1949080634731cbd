use dre_core::bdf::ReducedTrajectory;
use dre_core::krylov::{arnoldi_defect, eksm_expand, init_extended, init_rational};
use dre_core::problems::{gen_sym2d, seeded_inputs, ProblemKind, ProblemRecipe};
use dre_core::projection::{integrate_projected, residual_split_pair};
use dre_core::*;

fn sym2d_problem(grid: usize, p: usize, seed: u64) -> DreProblem {
    ProblemRecipe::generated(ProblemKind::Sym2d, grid, p, 1, 1, seed, 1.0).build().unwrap()
}

fn traj(values: Vec<Mat>, t_f: f64) -> ReducedTrajectory {
    let l = values.len() - 1;
    ReducedTrajectory { times: (0..=l).map(|j| t_f * j as f64 / l as f64).collect(), values }
}

#[test]
fn zero_data_converges_immediately() {
    let a = gen_sym2d(4);
    let prob = DreProblem::from_sparse(a, Mat::from_element(16, 1, 1.0), Mat::zeros(1, 16), Mat::zeros(16, 1), 1.0).unwrap();
    for kind in [BasisKind::Rational, BasisKind::Extended] {
        let res = solve_dre(&prob, &SolverConfig { kind, ..Default::default() }).unwrap();
        assert!(res.converged);
        assert_eq!(res.estimate.backward_error, 0.0);
        assert_eq!(res.max_rank(), 0);
        assert_eq!(res.state.dim(), 0);
        assert_eq!(res.factors.len(), 101);
    }
}

#[test]
fn quadrature_trivial_cases() {
    let zero = traj(vec![Mat::zeros(3, 3); 5], 2.0);
    let tau = Mat::identity(3, 3);
    assert_eq!(residual_quadrature(&zero, &tau), 0.0);

    let y = Mat::from_fn(3, 3, |i, j| (i + j) as f64 + 1.0);
    let y = &y + y.transpose();
    let constant = traj(vec![y.clone(); 11], 2.0);
    let mut e_last = Mat::zeros(3, 1);
    e_last[2] = 1.0;
    let rho = residual_quadrature(&constant, &e_last);
    assert!((rho - 2.0 * y.row(2).norm()).abs() < 1e-12 * rho);
}

#[test]
fn quadrature_within_rectangle_error() {
    let f = |t: f64| Mat::from_fn(2, 2, |i, j| ((i + j + 1) as f64 * t).sin() + 1.0);
    let tau = Mat::from_row_slice(2, 1, &[1.0, -0.5]);
    let l = 50;
    let coarse = traj((0..=l).map(|j| f(j as f64 / l as f64)).collect(), 1.0);
    let fine_n = 20_000;
    let vals: Vec<f64> = (0..=fine_n).map(|j| tau.tr_mul(&f(j as f64 / fine_n as f64)).norm()).collect();
    let trap: f64 = vals.windows(2).map(|w| 0.5 * (w[0] + w[1]) / fine_n as f64).sum();
    let rho = residual_quadrature(&coarse, &tau);
    // derivative of the integrand is bounded by a few units; rectangle error <= max|g'| t_f h / 2
    assert!((rho - trap).abs() <= 5.0 / l as f64, "{rho} vs {trap}");
}

#[test]
fn backward_error_trivial_cases() {
    let prob = sym2d_problem(5, 2, 3);
    let op = prob.op.as_ref();
    let mut st = init_extended(op, &prob.b, &prob.c, &prob.z).unwrap();
    eksm_expand(&mut st, op).unwrap();
    let d = st.dim();
    let zero = traj(vec![Mat::zeros(d, d); 6], 1.0);
    let est = backward_error(0.0, &zero, &st, prob.c.norm_squared(), 1.0);
    assert_eq!(est.backward_error, 0.0);

    let tr = integrate_projected(&st, &BdfScheme::new(1, 10).unwrap(), 1.0).unwrap();
    let rho = residual_quadrature(&tr, st.tau());
    let est = backward_error(rho, &tr, &st, prob.c.norm_squared(), 1.0);
    assert!(est.rho >= 0.0 && est.xi >= 0.0 && est.psi >= 0.0);
    assert!(est.rho / est.backward_error >= prob.c.norm_squared() * (1.0 - 1e-14));
}

#[test]
fn xi_matches_dense_route() {
    let prob = sym2d_problem(6, 2, 11);
    let op = prob.op.as_ref();
    let a = op.to_dense();
    let mut st = init_rational(op, &prob.b, &prob.c, &prob.z).unwrap();
    let mut ex = dre_core::krylov::RationalExtras::new((20.0, 500.0));
    for s in [20.0, 300.0, 70.0] {
        dre_core::krylov::rksm_expand(&mut st, &mut ex, op, num_complex::Complex64::new(s, 0.0)).unwrap();
    }
    let tr = integrate_projected(&st, &BdfScheme::new(2, 20).unwrap(), 1.0).unwrap();
    let est = backward_error(residual_quadrature(&tr, st.tau()), &tr, &st, prob.c.norm_squared(), 1.0);
    let h = tr.step();
    let dense: f64 = tr.values[1..].iter().map(|y| h * (a.transpose() * st.v() * y).norm()).sum();
    assert!((est.xi - dense).abs() <= 1e-8 * dense, "{} vs {dense}", est.xi);
}

#[test]
fn split_identity_for_arbitrary_pairs() {
    let prob = sym2d_problem(5, 2, 5);
    let op = prob.op.as_ref();
    let a = op.to_dense();
    let mut st = init_extended(op, &prob.b, &prob.c, &prob.z).unwrap();
    eksm_expand(&mut st, op).unwrap();
    eksm_expand(&mut st, op).unwrap();
    let d = st.dim();
    let inp = seeded_inputs(d, d, d, 1, 99);
    let y = &inp.b + inp.b.transpose();
    let dy = &inp.c + inp.c.transpose();
    let (lhs, rhs) = residual_split_pair(&a, &prob, &st, &y, &dy);
    assert!((lhs - rhs).abs() <= 1e-10 * lhs);

    let zero = Mat::zeros(d, d);
    let (lhs, rhs) = residual_split_pair(&a, &prob, &st, &zero, &zero);
    let cc = st.c_m().tr_mul(st.c_m()).norm_squared();
    assert!((lhs - cc).abs() <= 1e-10 * cc && (rhs - cc).abs() <= 1e-10 * cc);
}

#[test]
fn split_identity_on_invariant_space() {
    // full space: tau vanishes
    let prob = sym2d_problem(2, 1, 1);
    let op = prob.op.as_ref();
    let a = op.to_dense();
    let mut st = init_extended(op, &prob.b, &prob.c, &prob.z).unwrap();
    while !st.stagnated() {
        eksm_expand(&mut st, op).unwrap();
    }
    assert_eq!(st.dim(), 4);
    let y = Mat::from_fn(4, 4, |i, j| 1.0 / (1 + i + j) as f64);
    let dy = Mat::identity(4, 4);
    let (lhs, _) = residual_split_pair(&a, &prob, &st, &y, &dy);
    let inner = (&dy - dre_core::bdf::riccati_rhs(st.t(), st.b_m(), st.c_m(), &y)).norm_squared();
    assert!((lhs - inner).abs() <= 1e-10 * lhs);
}

#[test]
fn solve_contract_on_sym2d() {
    let prob = sym2d_problem(8, 2, 4);
    for kind in [BasisKind::Rational, BasisKind::Extended] {
        let res = solve_dre(&prob, &SolverConfig { kind, ..Default::default() }).unwrap();
        assert!(res.converged, "{kind:?}");
        assert!(res.estimate.backward_error < 1e-7);
        assert!(res.history.windows(2).all(|w| w[1].basis_dim > w[0].basis_dim));
        assert!(arnoldi_defect(&res.state, prob.op.as_ref()) < 1e-8 * prob.op.frobenius_norm());
        for f in &res.factors {
            assert_eq!(f.nrows(), res.state.dim());
        }
        assert!(res.min_rank() <= res.max_rank());
        assert_eq!(res.factors[0].ncols(), 1);
        // factors reproduce the refined trajectory up to truncation
        let j = res.factors.len() - 1;
        let y = &res.refined.values[j];
        let ff = &res.factors[j] * res.factors[j].transpose();
        assert!((y - ff).norm() <= 1e-6 * y.norm());
    }
}

#[test]
fn max_dim_flags_unconverged() {
    let prob = sym2d_problem(8, 2, 4);
    let cfg = SolverConfig { kind: BasisKind::Rational, max_dim: 6, tol: 1e-12, ..Default::default() };
    let res = solve_dre(&prob, &cfg).unwrap();
    assert!(!res.converged);
    assert!(res.state.dim() >= 6 && res.state.dim() < 6 + 3);
    assert!(!res.history.is_empty());
    assert!(res.history.iter().all(|r| r.estimate.is_some()));
}

#[test]
fn periodic_residual_checks() {
    let prob = sym2d_problem(8, 2, 4);
    let cfg = SolverConfig { kind: BasisKind::Extended, residual_check_period: 2, ..Default::default() };
    let res = solve_dre(&prob, &cfg).unwrap();
    assert!(res.converged);
    assert!(res.history.iter().any(|r| r.estimate.is_none()));
    assert!(res.history.iter().filter(|r| r.iteration % 2 == 1 && r.iteration != res.history.len()).all(|r| r.estimate.is_none()));
}

#[test]
fn config_validation() {
    let prob = sym2d_problem(3, 1, 1);
    for cfg in [
        SolverConfig { tol: 0.0, ..Default::default() },
        SolverConfig { max_dim: 10, ..Default::default() },
        SolverConfig { residual_check_period: 0, ..Default::default() },
        SolverConfig { shift_bounds: Some((2.0, 1.0)), ..Default::default() },
    ] {
        assert!(matches!(solve_dre(&prob, &cfg), Err(DreError::InvalidArgument(_))));
    }
}

#[test]
fn singular_matrix_fails_extended_init() {
    let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, -1.0), (1, 1, -2.0)]).unwrap();
    let prob = DreProblem::from_sparse(a, Mat::from_element(3, 1, 1.0), Mat::from_element(1, 3, 1.0), Mat::zeros(3, 1), 1.0).unwrap();
    let cfg = SolverConfig { kind: BasisKind::Extended, ..Default::default() };
    assert!(solve_dre(&prob, &cfg).is_err());
}

#[test]
fn steady_state_scalar() {
    let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]).unwrap();
    let prob = DreProblem::from_sparse(a, Mat::zeros(1, 1), Mat::from_element(1, 1, 2f64.sqrt()), Mat::zeros(1, 1), 1.0).unwrap();
    let st = init_extended(prob.op.as_ref(), &prob.b, &prob.c, &prob.z).unwrap();
    let y = steady_state(&st).unwrap();
    assert!((y[(0, 0)] - 1.0).abs() < 1e-12);
}

#[test]
fn steady_state_is_psd_and_stabilizing() {
    let prob = sym2d_problem(6, 2, 8);
    let res = solve_dre(&prob, &SolverConfig::default()).unwrap();
    let y = steady_state(&res.state).unwrap();
    let eig = y.clone().symmetric_eigen();
    assert!(eig.eigenvalues.min() > -1e-10 * y.norm());
    assert!(dre_core::bdf::closed_loop_abscissa(res.state.t(), res.state.b_m(), &y).unwrap() < 0.0);
}

#[test]
fn feedback_gain_factored_apply() {
    let prob = sym2d_problem(6, 2, 2);
    let no_z = DreProblem::new(prob.op.clone(), prob.b.clone(), prob.c.clone(), Mat::zeros(36, 1), 1.0).unwrap();
    let res = solve_dre(&no_z, &SolverConfig::default()).unwrap();
    assert_eq!(feedback_gain(&res, 0).unwrap().to_dense().norm(), 0.0);
    let res = solve_dre(&prob, &SolverConfig::default()).unwrap();
    let last = res.refined.len() - 1;
    let k = feedback_gain(&res, last).unwrap();
    let dense = k.to_dense();
    assert_eq!(dense.shape(), (1, 36));
    let v = seeded_inputs(36, 1, 1, 1, 3).b;
    let direct = res.state.b_m().tr_mul(&(&res.refined.values[last] * res.state.v().tr_mul(&v)));
    assert!((k.apply(&v) - &direct).norm() <= 1e-12 * direct.norm());
    assert!((&dense * &v - direct).norm() <= 1e-12 * dense.norm() * v.norm());
    assert!(feedback_gain(&res, last + 1).is_err());
}

#[test]
fn mass_transformed_problem_solves() {
    let a = gen_sym2d(6);
    let n = 36;
    let e = CsrMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, 2.0 + (i % 3) as f64)).collect::<Vec<_>>()).unwrap();
    let inp = seeded_inputs(n, 2, 1, 1, 21);
    let prob = dre_core::problems::apply_mass_transform(a, &inp.b, &inp.c, e, &inp.z, 1.0).unwrap();
    for kind in [BasisKind::Rational, BasisKind::Extended] {
        let res = solve_dre(&prob, &SolverConfig { kind, ..Default::default() }).unwrap();
        assert!(res.converged);
        assert!(arnoldi_defect(&res.state, prob.op.as_ref()) < 1e-8 * prob.op.frobenius_norm());
    }
}
