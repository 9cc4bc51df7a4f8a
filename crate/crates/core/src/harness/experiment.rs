//! Seeded multi-trial experiments: every (method, p, trial) run gets fresh
//! partitions and a draw stream derived from the master seed, so the whole
//! output directory is a pure function of the experiment description.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_norm_lsq_oracle, LinearSystem, Matrix, OracleSolution, ORACLE_MAX_DIM};
use crate::metrics::{convergence_factor_from_rse, summarize};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampling::{Axis, Partition, SamplingScheme};
use crate::solvers::{run_solver, svrg_default_inner, svrg_default_step, Method, RunRecord, SolverConfig};
use crate::theory::{block_gamma_max, compute_rates, BoundsConfig, DEFAULT_MAX_DIM};

use super::problem::{MatrixSource, ProblemSpec, RhsSource};

pub const METRICS_HEADER: &str = "method,p,trial,iterations,full_iterations,cpu_seconds,rho_actual,final_rse";
pub const SUMMARY_HEADER: &str = "method,p,metric,median,q25,q75,min,max";

const PURPOSE_ROWS: u64 = 0;
const PURPOSE_COLS: u64 = 1;
const PURPOSE_DRAWS: u64 = 2;

/// Constant REABK step presets, `c / Γ_max` with
/// `Γ_max = max(Γ_max^I, Γ_max^J)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPreset {
    /// `1.75 / Γ_max`
    Gaussian,
    /// `1 / Γ_max`
    Real,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    /// Column name in the outputs; defaults to the method name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub zeta: f64,
    /// Constant REABK step; overrides `alpha_preset`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub alpha_preset: Option<AlphaPreset>,
    #[serde(default)]
    pub svrg_alpha: Option<f64>,
    #[serde(default)]
    pub svrg_inner: Option<usize>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            label: None,
            eta: 1.0,
            zeta: 1.0,
            alpha: None,
            alpha_preset: None,
            svrg_alpha: None,
            svrg_inner: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.name().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stopping {
    #[serde(default = "default_rse_tol")]
    pub rse_tol: f64,
    #[serde(default)]
    pub residual_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_rse_tol() -> f64 {
    1e-12
}

fn default_max_iters() -> usize {
    200_000
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            rse_tol: default_rse_tol(),
            residual_tol: 0.0,
            max_iters: default_max_iters(),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_jobs() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    pub block_sizes: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub stopping: Stopping,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Write one trace CSV per (method, p, trial).
    #[serde(default = "default_true")]
    pub traces: bool,
    /// Write a bounds report per block size (needs the dense theory route).
    #[serde(default = "default_true")]
    pub bounds: bool,
    /// Fill the `cpu_seconds` / `elapsed_s` columns.
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate_for(&self, m: usize, n: usize) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods listed".into()));
        }
        if self.block_sizes.is_empty() && self.methods.iter().any(|s| s.method.uses_blocks() && s.method != Method::Rek)
        {
            return Err(Error::Config("no block sizes listed".into()));
        }
        for &p in &self.block_sizes {
            if p < 1 || p > m.min(n) {
                return Err(Error::BlockSize { p, dim: m.min(n) });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    /// Block size; 0 for SVRG, which samples single rows uniformly.
    pub p: usize,
    pub trial: usize,
    pub iterations: usize,
    pub full_iterations: f64,
    pub cpu_seconds: Option<f64>,
    pub rho_actual: Option<f64>,
    pub final_rse: Option<f64>,
    pub converged: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:e},{},{},{}",
            self.method,
            self.p,
            self.trial,
            self.iterations,
            self.full_iterations,
            opt(self.cpu_seconds),
            opt(self.rho_actual),
            opt(self.final_rse)
        )
    }
}

/// Row and column partitions of block size `p` for one trial.
pub fn trial_partitions(m: usize, n: usize, p: usize, master_seed: u64, trial: usize) -> Result<(Partition, Partition)> {
    let rows = Partition::random_seeded(m, p, derive_seed(master_seed, &[p as u64, trial as u64, PURPOSE_ROWS]))?;
    let cols = Partition::random_seeded(n, p, derive_seed(master_seed, &[p as u64, trial as u64, PURPOSE_COLS]))?;
    Ok((rows, cols))
}

pub fn trial_draw_seed(master_seed: u64, p: usize, trial: usize) -> u64 {
    derive_seed(master_seed, &[p as u64, trial as u64, PURPOSE_DRAWS])
}

/// Solver configuration for one method at block size `p`.
pub fn solver_config(
    spec: &MethodSpec,
    stopping: &Stopping,
    a: &Matrix,
    rows: &Partition,
    cols: &Partition,
    timing: bool,
) -> SolverConfig {
    let mut cfg = SolverConfig::new(spec.method);
    cfg.eta = spec.eta;
    cfg.zeta = spec.zeta;
    cfg.max_iters = stopping.max_iters;
    cfg.rse_tol = stopping.rse_tol;
    cfg.residual_tol = stopping.residual_tol;
    cfg.record_timing = timing;
    if spec.method == Method::ReabkConst {
        cfg.alpha_const = spec.alpha.unwrap_or_else(|| {
            let c = match spec.alpha_preset.unwrap_or(AlphaPreset::Gaussian) {
                AlphaPreset::Gaussian => 1.75,
                AlphaPreset::Real => 1.0,
            };
            let g = block_gamma_max(a, rows, Axis::Row).max(block_gamma_max(a, cols, Axis::Column));
            c / g
        });
    }
    if spec.method == Method::Svrg {
        cfg.svrg_alpha = spec.svrg_alpha.unwrap_or_else(|| svrg_default_step(a));
        cfg.svrg_inner_n = spec.svrg_inner.unwrap_or_else(|| svrg_default_inner(a));
    }
    cfg
}

#[derive(Clone, Debug)]
struct Job {
    method_idx: usize,
    p: usize,
    trial: usize,
}

#[derive(Debug)]
pub struct TrialResult {
    pub method: String,
    pub p: usize,
    pub trial: usize,
    pub record: RunRecord,
    pub metrics: MetricsRow,
}

#[derive(Debug, Default)]
pub struct ExperimentOutcome {
    /// `(m, n)` of the system.
    pub dims: (usize, usize),
    pub trials: Vec<TrialResult>,
    /// Bounds reports keyed by block size.
    pub bounds: Vec<(usize, String)>,
    pub notes: Vec<String>,
}

impl ExperimentOutcome {
    pub fn metrics(&self) -> impl Iterator<Item = &MetricsRow> {
        self.trials.iter().map(|t| &t.metrics)
    }

    /// Per-(method, p) values of one metric, in trial order.
    pub fn column(&self, method: &str, p: usize, f: impl Fn(&MetricsRow) -> Option<f64>) -> Vec<f64> {
        self.metrics()
            .filter(|r| r.method == method && r.p == p)
            .filter_map(f)
            .collect()
    }
}

fn run_job(
    job: &Job,
    spec: &ExperimentSpec,
    sys: &LinearSystem,
    oracle: Option<&OracleSolution>,
) -> Result<TrialResult> {
    let mspec = &spec.methods[job.method_idx];
    let (m, n) = (sys.m(), sys.n());
    let (rp, cp) = trial_partitions(m, n, job.p.max(1), spec.master_seed, job.trial)?;
    let rows = SamplingScheme::new(&sys.a, rp, Axis::Row)?;
    let cols = SamplingScheme::new(&sys.a, cp, Axis::Column)?;
    let cfg = solver_config(mspec, &spec.stopping, &sys.a, rows.partition(), cols.partition(), spec.timing);
    let mut rng = rng_from_seed(trial_draw_seed(spec.master_seed, job.p, job.trial));
    let record = run_solver(sys, &rows, &cols, &cfg, oracle, &mut rng)?;
    let k = record.iterations();
    let full_iterations = if mspec.method == Method::Svrg {
        // one full gradient plus N row gradients per outer step
        k as f64 * (m + cfg.svrg_inner_n) as f64 / m as f64
    } else {
        k as f64 * job.p as f64 / m as f64
    };
    let final_rse = record.final_rse();
    let rho_actual = final_rse.filter(|_| k > 0).map(|r| convergence_factor_from_rse(r, k));
    let metrics = MetricsRow {
        method: mspec.label(),
        p: job.p,
        trial: job.trial,
        iterations: k,
        full_iterations,
        cpu_seconds: record.elapsed_s(),
        rho_actual,
        final_rse,
        converged: record.status.converged(),
    };
    Ok(TrialResult {
        method: mspec.label(),
        p: job.p,
        trial: job.trial,
        record,
        metrics,
    })
}

/// Runs every (method, p, trial) combination. REK always uses `p = 1`; SVRG
/// ignores `p` and is reported with `p = 0`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let sys = spec.problem.build()?;
    let (m, n) = (sys.m(), sys.n());
    spec.validate_for(m, n)?;
    let mut outcome = ExperimentOutcome {
        dims: (m, n),
        ..Default::default()
    };

    let oracle = if m.max(n) <= ORACLE_MAX_DIM {
        Some(min_norm_lsq_oracle(&sys)?)
    } else {
        if spec.stopping.residual_tol <= 0.0 {
            return Err(Error::TooLarge(format!(
                "{m}x{n} exceeds the oracle cap of {ORACLE_MAX_DIM}; RSE stopping is unavailable, set stopping.residual_tol"
            )));
        }
        outcome.notes.push(format!(
            "oracle unavailable for {m}x{n}: stopping on the normal-equations residual ||A^T(Ax-b)|| < {:e}",
            spec.stopping.residual_tol
        ));
        None
    };
    let mut stopping_spec = spec.clone();
    if oracle.is_none() {
        stopping_spec.stopping.rse_tol = 0.0;
    }
    let spec = &stopping_spec;

    let mut jobs = Vec::new();
    for (mi, ms) in spec.methods.iter().enumerate() {
        let ps: Vec<usize> = match ms.method {
            Method::Rek => vec![1],
            Method::Svrg => vec![0],
            _ => spec.block_sizes.clone(),
        };
        for p in ps {
            for trial in 0..spec.trials {
                jobs.push(Job { method_idx: mi, p, trial });
            }
        }
    }

    if spec.bounds && m.max(n) <= DEFAULT_MAX_DIM {
        let mut ps: Vec<usize> = jobs.iter().map(|j| j.p).filter(|&p| p > 0).collect();
        ps.sort_unstable();
        ps.dedup();
        for p in ps {
            let (rp, cp) = trial_partitions(m, n, p, spec.master_seed, 0)?;
            let rows = SamplingScheme::new(&sys.a, rp, Axis::Row)?;
            let cols = SamplingScheme::new(&sys.a, cp, Axis::Column)?;
            let tb = compute_rates(&sys.a, &rows, &cols, &BoundsConfig::default())?;
            outcome.bounds.push((p, format!("p={p}\n{}", tb.to_report())));
        }
    }

    let slots: Vec<Mutex<Option<Result<TrialResult>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = spec.jobs.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let res = run_job(&jobs[i], spec, &sys, oracle.as_ref());
                *slots[i].lock().unwrap() = Some(res);
            });
        }
    });
    for slot in slots {
        outcome.trials.push(slot.into_inner().unwrap().expect("every job runs")?);
    }
    Ok(outcome)
}

fn summary_csv(outcome: &ExperimentOutcome) -> String {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in outcome.metrics() {
        if !keys.iter().any(|(m, p)| *m == r.method && *p == r.p) {
            keys.push((r.method.clone(), r.p));
        }
    }
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    type Getter = fn(&MetricsRow) -> Option<f64>;
    let metrics: [(&str, Getter); 4] = [
        ("iterations", |r| Some(r.iterations as f64)),
        ("full_iterations", |r| Some(r.full_iterations)),
        ("rho_actual", |r| r.rho_actual),
        ("final_rse", |r| r.final_rse),
    ];
    for (method, p) in keys {
        for (name, get) in metrics {
            if let Some(s) = summarize(&outcome.column(&method, p, get)) {
                writeln!(out, "{method},{p},{name},{:e},{:e},{:e},{:e},{:e}", s.median, s.q25, s.q75, s.min, s.max).unwrap();
            }
        }
    }
    out
}

fn meta_json(spec: &ExperimentSpec, sys: (usize, usize), notes: &[String]) -> String {
    let mut meta = serde_json::Map::new();
    meta.insert("m".into(), sys.0.into());
    meta.insert("n".into(), sys.1.into());
    if let MatrixSource::Generated { r, kappa, seed, .. } = spec.problem.source {
        meta.insert("r".into(), r.into());
        meta.insert("kappa".into(), kappa.into());
        meta.insert("matrix_seed".into(), seed.into());
    }
    match spec.problem.rhs {
        RhsSource::Inconsistent { seed } | RhsSource::Consistent { seed } => {
            meta.insert("rhs_seed".into(), seed.into());
        }
        RhsSource::File { .. } => {}
    }
    meta.insert("master_seed".into(), spec.master_seed.into());
    meta.insert("trials".into(), spec.trials.into());
    meta.insert("notes".into(), notes.to_vec().into());
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(meta)).unwrap();
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `metrics.csv`, `summary.csv`, `meta.json`, `bounds_p{p}.txt`,
/// `notes.txt` (if any) and `traces/{method}_p{p}_t{trial}.csv` into `dir`.
pub fn write_outputs(spec: &ExperimentSpec, outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut metrics = String::from(METRICS_HEADER);
    metrics.push('\n');
    for r in outcome.metrics() {
        metrics.push_str(&r.csv_line());
        metrics.push('\n');
    }
    write(&dir.join("metrics.csv"), &metrics)?;
    write(&dir.join("summary.csv"), &summary_csv(outcome))?;
    write(&dir.join("meta.json"), &meta_json(spec, outcome.dims, &outcome.notes))?;
    for (p, report) in &outcome.bounds {
        write(&dir.join(format!("bounds_p{p}.txt")), report)?;
    }
    if !outcome.notes.is_empty() {
        write(&dir.join("notes.txt"), &(outcome.notes.join("\n") + "\n"))?;
    }
    if spec.traces {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for t in &outcome.trials {
            let path = tdir.join(format!("{}_p{}_t{}.csv", t.method, t.p, t.trial));
            write(&path, &t.record.to_csv(t.trial))?;
        }
    }
    Ok(())
}

/// [`run_experiment`] followed by [`write_outputs`].
pub fn run_and_write(spec: &ExperimentSpec, dir: &Path) -> Result<ExperimentOutcome> {
    let outcome = run_experiment(spec)?;
    write_outputs(spec, &outcome, dir)?;
    Ok(outcome)
}
