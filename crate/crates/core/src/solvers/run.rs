use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, pseudo_inverse, sub, LinearSystem, OracleSolution};
use crate::metrics::rse;
use crate::sampling::{Axis, SamplingScheme};

use super::config::{Branch, Method, SolverConfig, StepDiagnostics};
use super::record::{IterRow, RunRecord, TerminalStatus};
use super::steps::{
    adaptive_x_step, adaptive_z_step, initial_h, momentum_x_step, momentum_z_step, reabk_const_step,
};
use super::svrg::svrg_run_from;

/// Iterates of an extended method after `k` steps.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub z_prev: Vec<f64>,
    /// Momentum history with `x - x_prev = Aᵀh` (zero for non-momentum methods).
    pub h: Vec<f64>,
    pub k: usize,
}

/// Blocks used and parameters chosen by one step.
#[derive(Clone, Copy, Debug)]
pub struct StepReport {
    pub col_block: usize,
    pub row_block: usize,
    pub diagnostics: StepDiagnostics,
}

/// Stateful driver for the block-sampling methods (everything but SVRG).
pub struct ExtendedSolver<'a> {
    sys: &'a LinearSystem,
    rows: &'a SamplingScheme,
    cols: &'a SamplingScheme,
    cfg: SolverConfig,
    state: SolverState,
}

impl<'a> ExtendedSolver<'a> {
    /// Starts from `z⁰ = b`, `x⁰ = 0`.
    pub fn new(
        sys: &'a LinearSystem,
        rows: &'a SamplingScheme,
        cols: &'a SamplingScheme,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        Self::with_initial(sys, rows, cols, cfg, vec![0.0; sys.n()], sys.b.clone())
    }

    /// Starts from caller-supplied points, which must satisfy
    /// `x⁰ ∈ Range(Aᵀ)` and `z⁰ ∈ b + Range(A)` (not checked here).
    pub fn with_initial(
        sys: &'a LinearSystem,
        rows: &'a SamplingScheme,
        cols: &'a SamplingScheme,
        cfg: &SolverConfig,
        x0: Vec<f64>,
        z0: Vec<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        if !cfg.method.uses_blocks() {
            return Err(Error::Config(format!("{} does not use block sampling", cfg.method)));
        }
        if rows.axis() != Axis::Row || cols.axis() != Axis::Column {
            return Err(Error::Config("expected a row scheme and a column scheme".into()));
        }
        if rows.partition().dim() != sys.m() || cols.partition().dim() != sys.n() {
            return Err(Error::Dimension("sampling schemes do not match the system".into()));
        }
        if x0.len() != sys.n() || z0.len() != sys.m() {
            return Err(Error::Dimension("initial points have the wrong length".into()));
        }
        if cfg.method == Method::Rek {
            let singleton = |s: &SamplingScheme| s.partition().blocks().iter().all(|b| b.len() == 1);
            if !singleton(rows) || !singleton(cols) {
                return Err(Error::Config("REK requires singleton row and column blocks".into()));
            }
        }
        let m = sys.m();
        Ok(Self {
            sys,
            rows,
            cols,
            cfg: cfg.clone(),
            state: SolverState {
                x_prev: x0.clone(),
                x: x0,
                z_prev: z0.clone(),
                z: z0,
                h: vec![0.0; m],
                k: 0,
            },
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Draws a column block, updates `z`, draws a row block, updates `x`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepReport> {
        let col = self.cols.draw(rng).block_id;
        let row = self.rows.draw(rng).block_id;
        self.step_with(col, row)
    }

    /// One step with prescribed column and row blocks.
    pub fn step_with(&mut self, col_block: usize, row_block: usize) -> Result<StepReport> {
        if col_block >= self.cols.num_blocks() || row_block >= self.rows.num_blocks() {
            return Err(Error::Config("block id out of range".into()));
        }
        let a = &self.sys.a;
        let b = &self.sys.b;
        let tdraw = self.cols.block(col_block);
        let sdraw = self.rows.block(row_block);
        let st = &mut self.state;
        let mut diag = StepDiagnostics::idle();

        let (z_next, x_next, h_next) = match self.cfg.method {
            Method::Rek | Method::ReabkConst => {
                let alpha = if self.cfg.method == Method::Rek { 1.0 } else { self.cfg.alpha_const };
                let (z, x) = reabk_const_step(a, &st.z, &st.x, b, &tdraw, &sdraw, alpha)?;
                diag.mu = alpha;
                diag.alpha = alpha;
                diag.z_branch = Branch::Adaptive;
                diag.x_branch = Branch::Adaptive;
                (z, x, None)
            }
            Method::Areabk => {
                let zs = adaptive_z_step(a, &st.z, &tdraw, self.cfg.eta)?;
                let bz: Vec<f64> = b.iter().zip(&zs.z).map(|(bi, zi)| bi - zi).collect();
                let xs = adaptive_x_step(a, &st.x, &bz, &sdraw, self.cfg.zeta)?;
                diag.mu = zs.mu;
                diag.alpha = xs.alpha;
                diag.z_branch = zs.branch;
                diag.x_branch = xs.branch;
                (zs.z, xs.x, None)
            }
            Method::Amreabk if st.k == 0 => {
                let zs = adaptive_z_step(a, &st.z, &tdraw, 1.0)?;
                let bz: Vec<f64> = b.iter().zip(&zs.z).map(|(bi, zi)| bi - zi).collect();
                let xs = adaptive_x_step(a, &st.x, &bz, &sdraw, 1.0)?;
                let h = initial_h(self.sys.m(), &xs, &sdraw);
                diag.mu = zs.mu;
                diag.alpha = xs.alpha;
                diag.z_branch = zs.branch;
                diag.x_branch = xs.branch;
                (zs.z, xs.x, Some(h))
            }
            Method::Amreabk => {
                let zs = momentum_z_step(a, &st.z, &st.z_prev, &tdraw)?;
                let xs = momentum_x_step(a, &st.x, &st.x_prev, &st.h, b, &zs.z, &st.z, &sdraw)?;
                diag.mu = zs.mu;
                diag.omega = zs.omega;
                diag.alpha = xs.alpha;
                diag.beta = xs.beta;
                diag.z_branch = zs.branch;
                diag.x_branch = xs.branch;
                (zs.z, xs.x, Some(xs.h))
            }
            Method::Svrg => unreachable!("rejected at construction"),
        };

        st.z_prev = std::mem::replace(&mut st.z, z_next);
        st.x_prev = std::mem::replace(&mut st.x, x_next);
        if let Some(h) = h_next {
            st.h = h;
        }
        st.k += 1;
        Ok(StepReport {
            col_block,
            row_block,
            diagnostics: diag,
        })
    }
}

/// Tracks stopping rules and builds the per-iteration record.
pub(crate) struct Monitor<'a> {
    sys: &'a LinearSystem,
    cfg: &'a SolverConfig,
    oracle: Option<&'a OracleSolution>,
    x0: Vec<f64>,
    want_residual: bool,
    start: Instant,
    pub rows: Vec<IterRow>,
}

impl<'a> Monitor<'a> {
    pub fn new(
        sys: &'a LinearSystem,
        cfg: &'a SolverConfig,
        oracle: Option<&'a OracleSolution>,
        x0: &[f64],
    ) -> Result<Self> {
        if oracle.is_none() && cfg.residual_tol == 0.0 && cfg.rse_tol > 0.0 {
            return Err(Error::Config(
                "RSE stopping requested without an oracle solution; set a residual tolerance".into(),
            ));
        }
        if let Some(o) = oracle {
            if o.x_star.len() != sys.n() {
                return Err(Error::Dimension("oracle solution has the wrong length".into()));
            }
        }
        Ok(Self {
            sys,
            cfg,
            oracle,
            x0: x0.to_vec(),
            want_residual: oracle.is_none() || cfg.residual_tol > 0.0,
            start: Instant::now(),
            rows: Vec::new(),
        })
    }

    /// Records iterate `x` at iteration `k`; returns a terminal status if a
    /// tolerance is met.
    pub fn observe(&mut self, k: usize, x: &[f64], diag: StepDiagnostics) -> Result<Option<TerminalStatus>> {
        let rse_val = match self.oracle {
            Some(o) => Some(rse(x, &o.x_star, &self.x0)?),
            None => None,
        };
        let residual = if self.want_residual {
            Some(self.sys.normal_residual(x)?)
        } else {
            None
        };
        let elapsed = self.cfg.record_timing.then(|| self.start.elapsed().as_secs_f64());
        self.rows.push(IterRow {
            k,
            rse: rse_val,
            normal_residual: residual,
            diagnostics: diag,
            elapsed_s: elapsed,
        });
        if matches!(rse_val, Some(r) if r < self.cfg.rse_tol) {
            return Ok(Some(TerminalStatus::ConvergedRse));
        }
        if self.cfg.residual_tol > 0.0 && matches!(residual, Some(r) if r < self.cfg.residual_tol) {
            return Ok(Some(TerminalStatus::ConvergedResidual));
        }
        Ok(None)
    }
}

/// Runs `cfg.method` from `z⁰ = b`, `x⁰ = 0` until a stopping rule fires.
pub fn run_solver<R: Rng + ?Sized>(
    sys: &LinearSystem,
    rows: &SamplingScheme,
    cols: &SamplingScheme,
    cfg: &SolverConfig,
    oracle: Option<&OracleSolution>,
    rng: &mut R,
) -> Result<RunRecord> {
    run_solver_from(sys, rows, cols, cfg, oracle, rng, vec![0.0; sys.n()], sys.b.clone())
}

/// Checks `x⁰ ∈ Range(Aᵀ)` and `z⁰ - b ∈ Range(A)` through the pseudoinverse.
fn check_initial_points(sys: &LinearSystem, x0: &[f64], z0: &[f64]) -> Result<()> {
    let pinv = pseudo_inverse(&sys.a)?;
    let ax = sys.a.apply(x0)?;
    let proj_x = &pinv * nalgebra::DVector::from_column_slice(&ax);
    if norm(&sub(x0, proj_x.as_slice())) > 1e-8 * norm(x0).max(1.0) {
        return Err(Error::Config("initial x is not in Range(A^T)".into()));
    }
    let d = sub(z0, &sys.b);
    let pd = &pinv * nalgebra::DVector::from_column_slice(&d);
    let proj_d = sys.a.apply(pd.as_slice())?;
    if norm(&sub(&d, &proj_d)) > 1e-8 * norm(&sys.b).max(1.0) {
        return Err(Error::Config("initial z is not in b + Range(A)".into()));
    }
    Ok(())
}

/// [`run_solver`] from explicit initial points. With an oracle present, the
/// points are checked for range membership.
#[allow(clippy::too_many_arguments)]
pub fn run_solver_from<R: Rng + ?Sized>(
    sys: &LinearSystem,
    rows: &SamplingScheme,
    cols: &SamplingScheme,
    cfg: &SolverConfig,
    oracle: Option<&OracleSolution>,
    rng: &mut R,
    x0: Vec<f64>,
    z0: Vec<f64>,
) -> Result<RunRecord> {
    let is_default = x0.iter().all(|v| *v == 0.0) && z0 == sys.b;
    if oracle.is_some() && !is_default {
        check_initial_points(sys, &x0, &z0)?;
    }
    if cfg.method == Method::Svrg {
        return svrg_run_from(sys, cfg, oracle, rng, x0);
    }
    let mut solver = ExtendedSolver::with_initial(sys, rows, cols, cfg, x0, z0)?;
    let mut monitor = Monitor::new(sys, cfg, oracle, &solver.state().x)?;
    let mut status = monitor.observe(0, &solver.state().x, StepDiagnostics::idle())?;
    while status.is_none() && solver.state().k < cfg.max_iters {
        let report = solver.step(rng)?;
        let st = solver.state();
        status = monitor.observe(st.k, &st.x, report.diagnostics)?;
    }
    Ok(RunRecord {
        rows: monitor.rows,
        status: status.unwrap_or(TerminalStatus::MaxIters),
        solution: solver.state.x,
        variance_proxy: Vec::new(),
    })
}
