mod common;

use common::{consistent, dense, dv, inconsistent, seeded_schemes};
use extkaczmarz::harness::{run_experiment, ExperimentSpec, MethodSpec, ProblemSpec, RhsSource, Stopping};
use extkaczmarz::linalg::{min_norm_lsq_oracle, pseudo_inverse, LinearSystem};
use extkaczmarz::rng::rng_from_seed;
use extkaczmarz::sampling::{Axis, Partition, SamplingScheme};
use extkaczmarz::solvers::{run_solver_from, ExtendedSolver, Method, SolverConfig, TerminalStatus};
use extkaczmarz::theory::compute_reabk_rates;
use extkaczmarz::Error;

#[test]
fn start_at_solution_stops_immediately() {
    let (sys, oracle) = consistent(30, 8, 8, 3.0, 7);
    let (rows, cols) = seeded_schemes(&sys.a, 4, 1);
    for method in [Method::Areabk, Method::Amreabk] {
        let cfg = SolverConfig::new(method);
        let rec = run_solver_from(
            &sys,
            &rows,
            &cols,
            &cfg,
            Some(&oracle),
            &mut rng_from_seed(0),
            oracle.x_star.clone(),
            sys.b.clone(),
        )
        .unwrap();
        assert_eq!(rec.status, TerminalStatus::ConvergedRse);
        assert_eq!(rec.iterations(), 0);
        assert_eq!(rec.final_rse(), Some(0.0));
    }
}

#[test]
fn initial_points_outside_the_ranges_are_rejected() {
    let (sys, oracle) = inconsistent(20, 6, 3, 2.0, 11);
    let (rows, cols) = seeded_schemes(&sys.a, 2, 3);
    let cfg = SolverConfig::new(Method::Areabk);
    // rank 3 < n, so some unit vector has a component in Null(A)
    let bad_x = (0..6)
        .map(|j| {
            let mut e = vec![0.0; 6];
            e[j] = 1.0;
            e
        })
        .find(|e| {
            let p = pseudo_inverse(&sys.a).unwrap() * dense(&sys.a) * dv(e);
            (p - dv(e)).norm() > 1e-3
        })
        .unwrap();
    let run = |x0: Vec<f64>, z0: Vec<f64>| {
        run_solver_from(&sys, &rows, &cols, &cfg, Some(&oracle), &mut rng_from_seed(0), x0, z0)
    };
    assert!(matches!(run(bad_x, sys.b.clone()), Err(Error::Config(_))));
    // b_perp itself is orthogonal to Range(A), so z0 = b + b_perp is off the affine set
    let z_bad: Vec<f64> = sys.b.iter().zip(&oracle.b_perp).map(|(b, e)| b + e).collect();
    assert!(matches!(run(vec![0.0; 6], z_bad), Err(Error::Config(_))));
    // b_perp = b - A x*, which lies in b + Range(A)
    assert!(run(vec![0.0; 6], oracle.b_perp.clone()).is_ok());
}

#[test]
fn iterates_stay_in_their_ranges() {
    let (sys, _) = inconsistent(40, 12, 6, 4.0, 21);
    let a = dense(&sys.a);
    let pinv = pseudo_inverse(&sys.a).unwrap();
    let px = &pinv * &a;
    let pz = &a * &pinv;
    let b = dv(&sys.b);
    let gamma = {
        let (rows, cols) = seeded_schemes(&sys.a, 4, 5);
        let r = compute_reabk_rates(&sys.a, rows.partition(), cols.partition()).unwrap();
        r.gamma_max_i.max(r.gamma_max_j)
    };
    for (method, p) in [
        (Method::Rek, 1),
        (Method::ReabkConst, 4),
        (Method::Areabk, 4),
        (Method::Amreabk, 4),
    ] {
        let (rows, cols) = seeded_schemes(&sys.a, p, 5);
        let mut cfg = SolverConfig::new(method);
        cfg.alpha_const = 1.75 / gamma;
        let mut solver = ExtendedSolver::new(&sys, &rows, &cols, &cfg).unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..300 {
            solver.step(&mut rng).unwrap();
            let st = solver.state();
            let x = dv(&st.x);
            let zb = dv(&st.z) - &b;
            assert!((&x - &px * &x).norm() <= 1e-8 * x.norm().max(1.0), "{method} x left Range(A^T)");
            assert!((&zb - &pz * &zb).norm() <= 1e-8 * b.norm().max(1.0), "{method} z left b + Range(A)");
        }
    }
}

#[test]
fn z_error_never_increases() {
    let (sys, oracle) = inconsistent(60, 15, 15, 5.0, 31);
    let b_perp = dv(&oracle.b_perp);
    let (rows, cols) = seeded_schemes(&sys.a, 3, 9);
    let cases = [
        (Method::Areabk, 0.3),
        (Method::Areabk, 1.0),
        (Method::Areabk, 1.7),
        (Method::Amreabk, 1.0),
    ];
    for (method, eta) in cases {
        let mut cfg = SolverConfig::new(method);
        cfg.eta = eta;
        let mut solver = ExtendedSolver::new(&sys, &rows, &cols, &cfg).unwrap();
        let mut rng = rng_from_seed(2);
        let mut prev = (dv(&solver.state().z) - &b_perp).norm();
        for k in 0..500 {
            solver.step(&mut rng).unwrap();
            let cur = (dv(&solver.state().z) - &b_perp).norm();
            assert!(cur <= prev * (1.0 + 1e-12) + 1e-14, "{method} eta={eta} step {k}: {prev} -> {cur}");
            prev = cur;
        }
    }
}

#[test]
fn momentum_inner_product_matches_projection_form() {
    // single-row blocks keep the 50 steps well above the rounding floor of x - A†(b - z)
    let (sys, _) = inconsistent(20, 6, 6, 3.0, 41);
    let (rows, cols) = seeded_schemes(&sys.a, 1, 4);
    let cfg = SolverConfig::new(Method::Amreabk);
    let mut solver = ExtendedSolver::new(&sys, &rows, &cols, &cfg).unwrap();
    let mut rng = rng_from_seed(6);
    solver.step(&mut rng).unwrap();
    for k in 1..=50 {
        let before = solver.state().clone();
        solver.step(&mut rng).unwrap();
        let z_next = dv(&solver.state().z);
        let dz = &z_next - dv(&before.z);
        let lhs = dv(&before.h).dot(&dz);
        let target = min_norm_lsq_oracle(
            &LinearSystem::new(sys.a.clone(), sys.b.iter().zip(z_next.iter()).map(|(b, z)| b - z).collect()).unwrap(),
        )
        .unwrap();
        let d = dv(&before.x) - dv(&before.x_prev);
        let e = dv(&before.x) - dv(&target.x_star);
        let rhs = d.dot(&e);
        // Cauchy-Schwarz magnitude of either inner product
        let scale = (dv(&before.h).norm() * dz.norm()).max(d.norm() * e.norm());
        assert!((lhs - rhs).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE), "step {k}: {lhs} vs {rhs}");
    }
}

#[test]
fn momentum_needs_no_more_iterations_in_most_paired_trials() {
    let spec = ExperimentSpec {
        problem: ProblemSpec::generated(200, 50, 50, 5.0, 77, RhsSource::Inconsistent { seed: 78 }),
        methods: vec![MethodSpec::new(Method::Areabk), MethodSpec::new(Method::Amreabk)],
        block_sizes: vec![16],
        trials: 20,
        master_seed: 5,
        stopping: Stopping {
            rse_tol: 1e-12,
            residual_tol: 0.0,
            max_iters: 200_000,
        },
        output: None,
        traces: false,
        bounds: false,
        timing: false,
        jobs: 4,
    };
    let out = run_experiment(&spec).unwrap();
    assert!(out.metrics().all(|r| r.converged && r.final_rse.unwrap() < 1e-12));
    let iters = |m: &str| out.column(m, 16, |r| Some(r.iterations as f64));
    let (slow, fast) = (iters("areabk"), iters("amreabk"));
    assert_eq!(slow.len(), 20);
    let wins = fast.iter().zip(&slow).filter(|(f, s)| f <= s).count();
    assert!(wins >= 16, "momentum no slower in only {wins}/20 trials");
}

#[test]
fn rek_rejects_non_singleton_blocks() {
    let (sys, _) = inconsistent(10, 4, 4, 2.0, 3);
    let rows = SamplingScheme::new(&sys.a, Partition::contiguous(10, 2).unwrap(), Axis::Row).unwrap();
    let cols = SamplingScheme::new(&sys.a, Partition::contiguous(4, 1).unwrap(), Axis::Column).unwrap();
    assert!(ExtendedSolver::new(&sys, &rows, &cols, &SolverConfig::new(Method::Rek)).is_err());
}
