//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use extkaczmarz::harness::{
    run_and_write, run_experiment, trial_partitions, ExperimentSpec, MethodSpec, ProblemSpec, RhsSource, Stopping,
};
use extkaczmarz::linalg::{min_norm_lsq_oracle, LinearSystem, Matrix, OracleSolution};
use extkaczmarz::metrics::median;
use extkaczmarz::rng::rng_from_seed;
use extkaczmarz::sampling::{Axis, Partition, SamplingScheme};
use extkaczmarz::solvers::{
    adaptive_x_step, adaptive_z_step, run_solver, svrg_default_inner, svrg_default_step, svrg_run, Branch,
    ExtendedSolver, Method, SolverConfig, TerminalStatus,
};
use extkaczmarz::theory::{check_exactness_sufficient, compute_rates, compute_reabk_rates, eval_g_f, BoundsConfig};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn instance(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> (LinearSystem, OracleSolution) {
    let sys = ProblemSpec::generated(m, n, r, kappa, seed, RhsSource::Inconsistent { seed: seed + 1000 })
        .build()
        .unwrap();
    let oracle = min_norm_lsq_oracle(&sys).unwrap();
    (sys, oracle)
}

fn schemes(a: &Matrix, rows: Partition, cols: Partition) -> (SamplingScheme, SamplingScheme) {
    (
        SamplingScheme::new(a, rows, Axis::Row).unwrap(),
        SamplingScheme::new(a, cols, Axis::Column).unwrap(),
    )
}

fn dense(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j))
}

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Plain REK written directly against a dense copy of A.
struct PlainRek {
    a: DMatrix<f64>,
    b: DVector<f64>,
    x: DVector<f64>,
    z: DVector<f64>,
}

impl PlainRek {
    fn step(&mut self, col: usize, row: usize) {
        let aj = self.a.column(col).into_owned();
        self.z -= &aj * (aj.dot(&self.z) / aj.norm_squared());
        let ai = self.a.row(row).transpose();
        let r = ai.dot(&self.x) - self.b[row] + self.z[row];
        self.x -= &ai * (r / ai.norm_squared());
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (sys, _) = instance(100, 20, 20, 5.0, 11);
    let mut worst: f64 = 0.0;
    for method in [Method::Areabk, Method::Rek] {
        let (rows, cols) = schemes(
            &sys.a,
            Partition::random_seeded(100, 1, 1).unwrap(),
            Partition::random_seeded(20, 1, 2).unwrap(),
        );
        let cfg = SolverConfig::new(method);
        let mut solver = ExtendedSolver::new(&sys, &rows, &cols, &cfg).unwrap();
        let mut reference = PlainRek {
            a: dense(&sys.a),
            b: dv(&sys.b),
            x: DVector::zeros(20),
            z: dv(&sys.b),
        };
        let mut rng = rng_from_seed(77);
        for _ in 0..500 {
            let rep = solver.step(&mut rng).unwrap();
            let col = cols.partition().blocks()[rep.col_block][0];
            let row = rows.partition().blocks()[rep.row_block][0];
            reference.step(col, row);
            let st = solver.state();
            worst = worst.max(rel(&dv(&st.x), &reference.x)).max(rel(&dv(&st.z), &reference.z));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 5.0,
        format!("max relative deviation {worst:.2e} over 500 iterates (adaptive p=1 and REK), {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst_x: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut steps = 0;
    for seed in 0..5u64 {
        let (sys, _) = instance(40, 12, 10, 8.0, 200 + seed);
        let (rows, cols) = schemes(
            &sys.a,
            Partition::random_seeded(40, 1, seed).unwrap(),
            Partition::random_seeded(12, 1, seed + 9).unwrap(),
        );
        let mut rng = rng_from_seed(seed);
        for _ in 0..200 {
            let x: Vec<f64> = (0..12).map(|_| StandardNormal.sample(&mut rng)).collect();
            let z: Vec<f64> = (0..40).map(|_| StandardNormal.sample(&mut rng)).collect();
            let rhs: Vec<f64> = (0..40).map(|_| StandardNormal.sample(&mut rng)).collect();
            let xs = adaptive_x_step(&sys.a, &x, &rhs, &rows.draw(&mut rng), 1.0).unwrap();
            let zs = adaptive_z_step(&sys.a, &z, &cols.draw(&mut rng), 1.0).unwrap();
            worst_x = worst_x.max((xs.alpha - 1.0).abs());
            worst_z = worst_z.max((zs.mu - 1.0).abs());
            steps += 1;
        }
    }
    check(
        worst_x <= 1e-14 && worst_z <= 1e-14,
        format!("{steps} steps: max |L_adap - 1| = {worst_x:.2e}, max |L̄_adap - 1| = {worst_z:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut all = true;
    for (r, kappa, seed) in [(64, 10.0, 31u64), (50, 40.0, 32)] {
        let (sys, oracle) = instance(512, 64, r, kappa, seed);
        for method in [Method::Areabk, Method::Amreabk] {
            let mut hits = 0;
            let mut iters = Vec::new();
            for trial in 0..20 {
                let (rp, cp) = trial_partitions(512, 64, 32, seed, trial).unwrap();
                let (rows, cols) = schemes(&sys.a, rp, cp);
                let mut cfg = SolverConfig::new(method);
                cfg.max_iters = 200_000;
                cfg.rse_tol = 1e-12;
                let rec =
                    run_solver(&sys, &rows, &cols, &cfg, Some(&oracle), &mut rng_from_seed(trial as u64)).unwrap();
                if rec.status == TerminalStatus::ConvergedRse {
                    hits += 1;
                }
                iters.push(rec.iterations() as f64);
            }
            all &= hits == 20;
            lines.push(format!("(512,64,{r},{kappa}) {}: {hits}/20, median {} its", method, median(&iters)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(all && secs < 60.0, format!("{}; {secs:.1} s", lines.join("; ")))
}

/// Shared 20-trial sweep over p on the (512, 64, 64, 10) instance.
struct Sweep {
    spec: ExperimentSpec,
    outcome: extkaczmarz::harness::ExperimentOutcome,
}

fn sweep() -> Sweep {
    let spec = ExperimentSpec {
        problem: ProblemSpec::generated(512, 64, 64, 10.0, 41, RhsSource::Inconsistent { seed: 42 }),
        methods: vec![MethodSpec::new(Method::Areabk), MethodSpec::new(Method::Amreabk)],
        block_sizes: vec![4, 8, 16, 32, 64],
        trials: 20,
        master_seed: 2024,
        stopping: Stopping {
            rse_tol: 1e-12,
            residual_tol: 0.0,
            max_iters: 200_000,
        },
        output: None,
        traces: false,
        bounds: false,
        timing: false,
        jobs: 1,
    };
    let outcome = run_experiment(&spec).unwrap();
    Sweep { spec, outcome }
}

fn criterion_4(sw: &Sweep) -> Outcome {
    let a = sw.spec.problem.build_matrix().unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for &p in &sw.spec.block_sizes {
        let mut rho3 = Vec::new();
        for trial in 0..sw.spec.trials {
            let (rp, cp) = trial_partitions(512, 64, p, sw.spec.master_seed, trial).unwrap();
            let reabk = compute_reabk_rates(&a, &rp, &cp).unwrap();
            let (rows, cols) = schemes(&a, rp, cp);
            let tb = compute_rates(&a, &rows, &cols, &BoundsConfig::default()).unwrap();
            if tb.rho > reabk.rho3 {
                ok = false;
                lines.push(format!("p={p} trial {trial}: rho {:.6} > rho3 {:.6}", tb.rho, reabk.rho3));
            }
            rho3.push(reabk.rho3);
        }
        let rho3_med = median(&rho3);
        for method in ["areabk", "amreabk"] {
            let rho = median(&sw.outcome.column(method, p, |r| r.rho_actual));
            ok &= rho <= rho3_med;
            lines.push(format!("p={p} {method} {rho:.5}<={rho3_med:.5}"));
        }
    }
    check(ok, format!("median rho_actual vs rho3: {}", lines.join(", ")))
}

fn criterion_5(sw: &Sweep) -> Outcome {
    let full = |method: &str, p: usize| median(&sw.outcome.column(method, p, |r| Some(r.full_iterations)));
    let ps = [8, 16, 32, 64];
    let am: Vec<f64> = ps.iter().map(|&p| full("amreabk", p)).collect();
    let ad: Vec<f64> = ps.iter().map(|&p| full("areabk", p)).collect();
    let monotone = am.windows(2).all(|w| w[1] <= w[0]);
    let dominated = am.iter().zip(&ad).all(|(a, b)| a <= b);
    let table: Vec<String> = ps
        .iter()
        .zip(am.iter().zip(&ad))
        .map(|(p, (a, b))| format!("p={p} {a:.1}/{b:.1}"))
        .collect();
    check(
        monotone && dominated,
        format!("median full iterations amreabk/areabk: {}", table.join(", ")),
    )
}

/// Step-by-step record of an AmREABK run with everything the invariant checks need.
struct Tracked {
    a: DMatrix<f64>,
    b: DVector<f64>,
    b_perp: DVector<f64>,
    a_pinv: DMatrix<f64>,
    xs: Vec<DVector<f64>>,
    zs: Vec<DVector<f64>>,
    hs: Vec<DVector<f64>>,
    branches: Vec<(Branch, Branch)>,
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

fn tracked_run() -> Tracked {
    let (sys, _) = instance(200, 50, 50, 10.0, 61);
    let a = dense(&sys.a);
    // full column rank, so A† = (AᵀA)⁻¹Aᵀ by Cholesky, independent of the SVD oracle
    let a_pinv = (a.transpose() * &a).cholesky().unwrap().solve(&a.transpose());
    let b = dv(&sys.b);
    let b_perp = &b - &a * (&a_pinv * &b);
    let (rows, cols) = schemes(
        &sys.a,
        Partition::random_seeded(200, 10, 5).unwrap(),
        Partition::random_seeded(50, 10, 6).unwrap(),
    );
    let cfg = SolverConfig::new(Method::Amreabk);
    let mut solver = ExtendedSolver::new(&sys, &rows, &cols, &cfg).unwrap();
    let mut t = Tracked {
        a,
        b,
        b_perp,
        a_pinv,
        xs: vec![dv(&solver.state().x)],
        zs: vec![dv(&solver.state().z)],
        hs: vec![dv(&solver.state().h)],
        branches: vec![(Branch::Frozen, Branch::Frozen)],
        blocks: vec![(vec![], vec![])],
    };
    let mut rng = rng_from_seed(8);
    for _ in 0..1000 {
        let rep = solver.step(&mut rng).unwrap();
        let st = solver.state();
        t.xs.push(dv(&st.x));
        t.zs.push(dv(&st.z));
        t.hs.push(dv(&st.h));
        t.branches.push((rep.diagnostics.z_branch, rep.diagnostics.x_branch));
        t.blocks.push((
            cols.partition().blocks()[rep.col_block].clone(),
            rows.partition().blocks()[rep.row_block].clone(),
        ));
    }
    t
}

/// Point of `base + span{u, v}` closest to `target`, by a 2x2 normal-equation solve.
fn project_2d(base: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>, target: &DVector<f64>) -> DVector<f64> {
    let g = Matrix2::new(u.dot(u), u.dot(v), u.dot(v), v.dot(v));
    let e = target - base;
    let c = g.lu().solve(&Vector2::new(u.dot(&e), v.dot(&e))).unwrap();
    base + u * c[0] + v * c[1]
}

fn criterion_6(t: &Tracked) -> Outcome {
    let k_max = t.xs.len() - 1;
    let mut worst_mono: f64 = 0.0;
    let mut worst_orth_z: f64 = 0.0;
    let mut worst_orth_x: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let mut worst_proj: f64 = 0.0;
    let mut momentum_steps = 0;
    let e0 = (&t.zs[0] - &t.b_perp).norm();
    for k in 1..=k_max {
        let ez_prev = (&t.zs[k - 1] - &t.b_perp).norm();
        let ez = (&t.zs[k] - &t.b_perp).norm();
        worst_mono = worst_mono.max((ez - ez_prev) / e0);

        let dz = &t.zs[k] - &t.zs[k - 1];
        let ez_vec = &t.zs[k] - &t.b_perp;
        let scale = ez_vec.norm() * dz.norm();
        if scale > 0.0 {
            worst_orth_z = worst_orth_z.max(ez_vec.dot(&dz) / scale);
        }
        let dx = &t.xs[k] - &t.xs[k - 1];
        let ex = &t.xs[k] - &t.a_pinv * (&t.b - &t.zs[k]);
        let scale = ex.norm() * dx.norm();
        if scale > 0.0 {
            worst_orth_x = worst_orth_x.max(ex.dot(&dx) / scale);
        }
        let ath = t.a.transpose() * &t.hs[k];
        if dx.norm() > 0.0 {
            worst_h = worst_h.max((&dx - ath).norm() / dx.norm());
        }

        if k >= 2 {
            let (zb, xb) = t.branches[k];
            let (cols, rows) = &t.blocks[k];
            if zb == Branch::Momentum {
                let aj = t.a.select_columns(cols);
                let dir = &aj * (aj.transpose() * &t.zs[k - 1]);
                let dprev = &t.zs[k - 1] - &t.zs[k - 2];
                let oracle = project_2d(&t.zs[k - 1], &dir, &dprev, &t.b_perp);
                worst_proj = worst_proj.max(rel(&t.zs[k], &oracle));
                momentum_steps += 1;
            }
            if xb == Branch::Momentum {
                let ai = t.a.select_rows(rows);
                let bi = DVector::from_iterator(rows.len(), rows.iter().map(|&i| t.b[i] - t.zs[k][i]));
                let dir = ai.transpose() * (&ai * &t.xs[k - 1] - bi);
                let dprev = &t.xs[k - 1] - &t.xs[k - 2];
                let target = &t.a_pinv * (&t.b - &t.zs[k]);
                let oracle = project_2d(&t.xs[k - 1], &dir, &dprev, &target);
                worst_proj = worst_proj.max(rel(&t.xs[k], &oracle));
                momentum_steps += 1;
            }
        }
    }
    let ok = worst_mono <= 0.0 && worst_orth_z <= 1e-8 && worst_orth_x <= 1e-8 && worst_h <= 1e-10 && worst_proj <= 1e-10;
    check(
        ok,
        format!(
            "(a) max growth of ||z-b_perp|| {worst_mono:.2e}; (b) orthogonality z {worst_orth_z:.2e}, x {worst_orth_x:.2e}; \
             (c) h-consistency {worst_h:.2e}; (d) 2D projection {worst_proj:.2e} over {momentum_steps} momentum half-steps"
        ),
    )
}

fn criterion_7(t: &Tracked) -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..t.xs.len() - 1 {
        let dz = &t.zs[k + 1] - &t.zs[k];
        let lhs = t.hs[k].dot(&dz);
        let dx = &t.xs[k] - &t.xs[k - 1];
        let ex = &t.xs[k] - &t.a_pinv * (&t.b - &t.zs[k + 1]);
        let rhs = dx.dot(&ex);
        let scale = (t.hs[k].norm() * dz.norm()).max(dx.norm() * ex.norm());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    check(worst <= 1e-10, format!("max relative gap {worst:.2e} over {} steps", t.xs.len() - 2))
}

fn criterion_8() -> Outcome {
    let mut worst_id: f64 = 0.0;
    for n in [2usize, 5, 17, 64] {
        let a = Matrix::identity(n);
        let (rows, cols) = schemes(&a, Partition::contiguous(n, 1).unwrap(), Partition::contiguous(n, 1).unwrap());
        let tb = compute_rates(&a, &rows, &cols, &BoundsConfig::default()).unwrap();
        worst_id = worst_id.max((tb.rho - (1.0 - 1.0 / n as f64)).abs());
    }
    let mut worst_rek: f64 = 0.0;
    for seed in 0..3u64 {
        let (sys, _) = instance(30, 8, 6 + seed as usize, 7.0, 300 + seed);
        let (rows, cols) = schemes(
            &sys.a,
            Partition::random_seeded(30, 1, seed).unwrap(),
            Partition::random_seeded(8, 1, seed + 1).unwrap(),
        );
        let tb = compute_rates(&sys.a, &rows, &cols, &BoundsConfig::default()).unwrap();
        // smallest nonzero eigenvalue of AᵀA
        let a = dense(&sys.a);
        let ev = (a.transpose() * &a).symmetric_eigen().eigenvalues;
        let top = ev.max();
        let smin2 = ev.iter().cloned().filter(|&l| l > 1e-10 * top).fold(f64::INFINITY, f64::min);
        let expect = 1.0 - smin2 / a.norm_squared();
        worst_rek = worst_rek.max((tb.rho - expect).abs());
    }
    check(
        worst_id <= 1e-14 && worst_rek <= 1e-10,
        format!("identity |rho - (1 - 1/n)| {worst_id:.2e}; single-row/column |rho - (1 - s_min^2/||A||_F^2)| {worst_rek:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut cases = 0;
    for seed in 0..4u64 {
        let (sys, oracle) = instance(12, 5, 4, 6.0, 400 + seed);
        for eta in [1.0, 0.6, 1.5] {
            let (rows, cols) = schemes(
                &sys.a,
                Partition::random_seeded(12, 3, seed).unwrap(),
                Partition::random_seeded(5, 3, seed + 50).unwrap(),
            );
            let bc = BoundsConfig {
                eta,
                ..BoundsConfig::default()
            };
            let tb = compute_rates(&sys.a, &rows, &cols, &bc).unwrap();
            let bp = dv(&oracle.b_perp);
            let e0 = (dv(&sys.b) - &bp).norm_squared();
            let mut expect = 0.0;
            for (draw, prob) in cols.support() {
                let z1 = adaptive_z_step(&sys.a, &sys.b, &draw, eta).unwrap().z;
                expect += prob * (dv(&z1) - &bp).norm_squared();
            }
            worst = worst.max((expect - tb.rho_z * e0) / e0);
            cases += 1;
        }
    }
    check(
        worst <= 1e-10,
        format!("{cases} cases: max (E||z1-b_perp||^2 - rho_z ||z0-b_perp||^2)/||z0-b_perp||^2 = {worst:.2e}"),
    )
}

fn criterion_10() -> Outcome {
    let mut worst_zero: f64 = 0.0;
    let mut min_pos = f64::INFINITY;
    let mut instances = 0;
    for seed in 0..3u64 {
        let (sys, _) = instance(40, 10, 8, 5.0, 500 + seed);
        // normalize so that ||A||_F = ||b|| = 1
        let fa = sys.a.frobenius_norm_sq().sqrt();
        let nb = sys.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a = sys.a.scaled(1.0 / fa).unwrap();
        let b: Vec<f64> = sys.b.iter().map(|v| v / nb).collect();
        let norm_sys = LinearSystem::new(a, b).unwrap();
        let oracle = min_norm_lsq_oracle(&norm_sys).unwrap();
        let (rows, cols) = schemes(
            &norm_sys.a,
            Partition::random_seeded(40, 4, seed).unwrap(),
            Partition::random_seeded(10, 4, seed + 1).unwrap(),
        );
        if !check_exactness_sufficient(&rows, &cols).sufficient {
            return Err(format!("exactness check unexpectedly false on instance {seed}"));
        }
        instances += 1;
        let (g, f) = eval_g_f(&norm_sys.a, &norm_sys.b, &rows, &cols, &oracle.x_star, &oracle.b_perp).unwrap();
        worst_zero = worst_zero.max(g).max(f);
        let mut rng = rng_from_seed(seed);
        for _ in 0..10 {
            let x: Vec<f64> = oracle.x_star.iter().map(|v| v + 1e-3 * rng.random::<f64>()).collect();
            let z: Vec<f64> = oracle.b_perp.iter().map(|v| v + 1e-3 * rng.random::<f64>()).collect();
            let (g, f) = eval_g_f(&norm_sys.a, &norm_sys.b, &rows, &cols, &x, &z).unwrap();
            min_pos = min_pos.min(g).min(f);
        }
    }
    check(
        worst_zero <= 1e-18 && min_pos > 0.0,
        format!("{instances} instances: max(g, f) at solution {worst_zero:.2e}; min over perturbations {min_pos:.2e}"),
    )
}

fn criterion_11() -> Outcome {
    let (sys, oracle) = instance(100, 20, 20, 2.0, 71);
    let mut cfg = SolverConfig::new(Method::Svrg);
    cfg.svrg_alpha = svrg_default_step(&sys.a);
    cfg.svrg_inner_n = svrg_default_inner(&sys.a);
    cfg.max_iters = 300;
    cfg.rse_tol = 1e-6;
    cfg.track_variance = true;
    let rec = svrg_run(&sys, &cfg, Some(&oracle), &mut rng_from_seed(3)).unwrap();
    let first = rec.variance_proxy[0];
    let last = *rec.variance_proxy.last().unwrap();
    check(
        rec.status == TerminalStatus::ConvergedRse && last < first,
        format!(
            "status {} after {} outer iterations (final RSE {:.2e}); variance proxy first {first:.2e}, last {last:.2e}",
            rec.status.name(),
            rec.iterations(),
            rec.final_rse().unwrap()
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_12() -> Outcome {
    let mut reabk = MethodSpec::new(Method::ReabkConst);
    reabk.label = Some("reabk_gauss".into());
    let spec = ExperimentSpec {
        problem: ProblemSpec::generated(60, 12, 10, 5.0, 81, RhsSource::Inconsistent { seed: 82 }),
        methods: vec![
            MethodSpec::new(Method::Rek),
            reabk,
            MethodSpec::new(Method::Areabk),
            MethodSpec::new(Method::Amreabk),
            MethodSpec::new(Method::Svrg),
        ],
        block_sizes: vec![3, 6],
        trials: 3,
        master_seed: 99,
        stopping: Stopping {
            rse_tol: 1e-10,
            residual_tol: 0.0,
            max_iters: 20_000,
        },
        output: None,
        traces: true,
        bounds: true,
        timing: false,
        jobs: 1,
    };
    let tmp = tempfile::tempdir().unwrap();
    let d1 = tmp.path().join("run1");
    let d2 = tmp.path().join("run2");
    run_and_write(&spec, &d1).unwrap();
    let mut spec2 = spec.clone();
    spec2.jobs = 3;
    run_and_write(&spec2, &d2).unwrap();
    let t1 = read_tree(&d1);
    let t2 = read_tree(&d2);
    let csvs = t1.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    check(
        t1 == t2 && csvs > 0,
        format!("{} files ({csvs} CSV) compared between a serial and a 3-worker run", t1.len()),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome, failures: &mut Vec<String>) {
    let start = Instant::now();
    let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
        Err(detail) => {
            println!("FAIL  {name}: {detail} [{secs:.1} s]");
            failures.push(name.to_string());
        }
    }
}

fn main() {
    let mut failures = Vec::new();
    run("criterion 1 (REK reduction)", criterion_1, &mut failures);
    run("criterion 2 (unit adaptive steps for single rows/columns)", criterion_2, &mut failures);
    run("criterion 3 (convergence to A†b)", criterion_3, &mut failures);
    let sw = panic::catch_unwind(sweep).ok();
    match &sw {
        Some(sw) => {
            run("criterion 4 (rho_actual below rho3)", || criterion_4(sw), &mut failures);
            run("criterion 5 (block-size trend)", || criterion_5(sw), &mut failures);
        }
        None => {
            run("criterion 4 (rho_actual below rho3)", || Err("sweep failed".into()), &mut failures);
            run("criterion 5 (block-size trend)", || Err("sweep failed".into()), &mut failures);
        }
    }
    let tracked = panic::catch_unwind(tracked_run).ok();
    match &tracked {
        Some(t) => {
            run("criterion 6 (trajectory invariants)", || criterion_6(t), &mut failures);
            run("criterion 7 (momentum inner-product identity)", || criterion_7(t), &mut failures);
        }
        None => {
            run("criterion 6 (trajectory invariants)", || Err("run failed".into()), &mut failures);
            run("criterion 7 (momentum inner-product identity)", || Err("run failed".into()), &mut failures);
        }
    }
    run("criterion 8 (rate closure)", criterion_8, &mut failures);
    run("criterion 9 (one-step expectation)", criterion_9, &mut failures);
    run("criterion 10 (reformulation exactness)", criterion_10, &mut failures);
    run("criterion 11 (SVRG baseline)", criterion_11, &mut failures);
    run("criterion 12 (determinism)", criterion_12, &mut failures);
    if failures.is_empty() {
        println!("acceptance: all 12 criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failures.len(), failures.join(", "));
        std::process::exit(1);
    }
}
