use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use extkaczmarz::error::{Error, Result};
use extkaczmarz::harness::{
    gen_consistent_rhs, gen_gaussian_udv, gen_inconsistent_rhs, read_matrix_market, read_vector, run_and_write,
    solver_config, write_matrix_market, write_vector, ExperimentSpec, MethodSpec, Stopping,
};
use extkaczmarz::linalg::{min_norm_lsq_oracle, LinearSystem, ORACLE_MAX_DIM};
use extkaczmarz::rng::{derive_seed, rng_from_seed};
use extkaczmarz::sampling::{Axis, Partition, SamplingScheme};
use extkaczmarz::solvers::{run_solver, Method, TerminalStatus};
use extkaczmarz::theory::{compute_rates, BoundsConfig};

#[derive(Parser)]
#[command(name = "extkaczmarz", version, about = "Randomized extended Kaczmarz solvers for min-norm least squares")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a Gaussian U D V^T test problem (A.mtx, b.txt, meta.json).
    Gen(GenArgs),
    /// Run one solver on a Matrix Market system.
    Solve(SolveArgs),
    /// Print the rate certificates for a matrix and block size.
    Bounds(BoundsArgs),
    /// Run a multi-trial experiment described by a TOML file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Rank (defaults to min(m, n)).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Make b = A x instead of adding a component in Null(A^T).
    #[arg(long)]
    consistent: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long, default_value = "amreabk")]
    method: Method,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    /// Constant step for `reabk` (default 1.75 / Gamma_max).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol_rse: f64,
    #[arg(long, default_value_t = 0.0)]
    tol_res: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solution vector path.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Partition seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent trials (overrides `jobs` in the config).
    #[arg(long)]
    jobs: Option<usize>,
}

fn schemes(sys_a: &extkaczmarz::Matrix, p: usize, seed: u64) -> Result<(SamplingScheme, SamplingScheme)> {
    let rows = Partition::random_seeded(sys_a.nrows(), p, derive_seed(seed, &[0]))?;
    let cols = Partition::random_seeded(sys_a.ncols(), p, derive_seed(seed, &[1]))?;
    Ok((
        SamplingScheme::new(sys_a, rows, Axis::Row)?,
        SamplingScheme::new(sys_a, cols, Axis::Column)?,
    ))
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let r = args.r.unwrap_or(args.m.min(args.n));
    let a = gen_gaussian_udv(args.m, args.n, r, args.kappa, &mut rng_from_seed(args.seed))?;
    let rhs_seed = derive_seed(args.seed, &[1]);
    let b = if args.consistent {
        gen_consistent_rhs(&a, &mut rng_from_seed(rhs_seed))?
    } else {
        gen_inconsistent_rhs(&a, &mut rng_from_seed(rhs_seed))?
    };
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_matrix_market(&a, &args.out.join("A.mtx"))?;
    write_vector(&b, &args.out.join("b.txt"))?;
    let meta = serde_json::json!({
        "m": args.m,
        "n": args.n,
        "r": r,
        "kappa": args.kappa,
        "seeds": { "matrix": args.seed, "rhs": rhs_seed },
        "consistent": args.consistent,
    });
    let path = args.out.join("meta.json");
    fs::write(&path, serde_json::to_string_pretty(&meta).unwrap() + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let sys = LinearSystem::new(read_matrix_market(&args.matrix)?, read_vector(&args.rhs)?)?;
    let p = if args.method == Method::Rek { 1 } else { args.p };
    let (rows, cols) = schemes(&sys.a, p, args.seed)?;
    let mut mspec = MethodSpec::new(args.method);
    mspec.eta = args.eta;
    mspec.zeta = args.zeta;
    mspec.alpha = args.alpha;
    let oracle = if sys.m().max(sys.n()) <= ORACLE_MAX_DIM {
        Some(min_norm_lsq_oracle(&sys)?)
    } else {
        eprintln!("note: system too large for the oracle; stopping on ||A^T(Ax-b)|| only");
        None
    };
    let stopping = Stopping {
        rse_tol: if oracle.is_some() { args.tol_rse } else { 0.0 },
        residual_tol: args.tol_res,
        max_iters: args.max_iters,
    };
    let cfg = solver_config(&mspec, &stopping, &sys.a, rows.partition(), cols.partition(), false);
    let mut rng = rng_from_seed(derive_seed(args.seed, &[2]));
    let record = run_solver(&sys, &rows, &cols, &cfg, oracle.as_ref(), &mut rng)?;
    if let Some(path) = &args.out {
        fs::write(path, record.to_csv(0)).map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &args.solution {
        write_vector(&record.solution, path)?;
    }
    let last = record.rows.last().expect("record has the initial row");
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_else(|| "-".into());
    println!(
        "status={} iterations={} rse={} normal_residual={}",
        record.status.name(),
        record.iterations(),
        fmt(last.rse),
        fmt(last.normal_residual)
    );
    Ok(match record.status {
        TerminalStatus::MaxIters => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

fn bounds(args: BoundsArgs) -> Result<ExitCode> {
    let a = read_matrix_market(&args.matrix)?;
    let (rows, cols) = schemes(&a, args.p, args.seed)?;
    let cfg = BoundsConfig::new(args.eta, args.zeta, args.eps);
    let report = compute_rates(&a, &rows, &cols, &cfg)?.to_report();
    match &args.out {
        Some(path) => fs::write(path, report).map_err(|e| Error::io(path, e))?,
        None => print!("{report}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::load(&args.config)?;
    if let Some(j) = args.jobs {
        spec.jobs = j;
    }
    let dir = args
        .out
        .or_else(|| spec.output.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))?;
    let outcome = run_and_write(&spec, &dir)?;
    let total = outcome.trials.len();
    let converged = outcome.metrics().filter(|r| r.converged).count();
    println!("{converged}/{total} runs converged; outputs in {}", dir.display());
    Ok(if converged == total { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Bounds(a) => bounds(a),
        Cmd::Bench(a) => bench(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
