//! SVRG baseline for `min (1/2m)‖Ax - b‖²` with uniform row sampling and
//! the last inner iterate as the next outer point.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, LinearSystem, Matrix, OracleSolution};

use super::config::{Branch, Method, SolverConfig, StepDiagnostics};
use super::record::{RunRecord, TerminalStatus};
use super::run::Monitor;

/// Default step `0.1 / max_i ‖A[i, :]‖²`.
pub fn svrg_default_step(a: &Matrix) -> f64 {
    let l = a.row_norms_sq().into_iter().fold(0.0, f64::max);
    0.1 / l
}

/// Default inner loop length `2m`.
pub fn svrg_default_inner(a: &Matrix) -> usize {
    2 * a.nrows()
}

/// `(1/m) Aᵀ(Ax - b)`
pub fn full_gradient(sys: &LinearSystem, x: &[f64]) -> Result<Vec<f64>> {
    let mut r = sys.a.apply(x)?;
    for (ri, bi) in r.iter_mut().zip(&sys.b) {
        *ri -= bi;
    }
    let inv_m = 1.0 / sys.m() as f64;
    Ok(sys.a.transpose_apply(&r)?.into_iter().map(|g| g * inv_m).collect())
}

pub fn svrg_run<R: Rng + ?Sized>(
    sys: &LinearSystem,
    cfg: &SolverConfig,
    oracle: Option<&OracleSolution>,
    rng: &mut R,
) -> Result<RunRecord> {
    svrg_run_from(sys, cfg, oracle, rng, vec![0.0; sys.n()])
}

pub(crate) fn svrg_run_from<R: Rng + ?Sized>(
    sys: &LinearSystem,
    cfg: &SolverConfig,
    oracle: Option<&OracleSolution>,
    rng: &mut R,
    x0: Vec<f64>,
) -> Result<RunRecord> {
    cfg.validate()?;
    if cfg.method != Method::Svrg {
        return Err(Error::Config(format!("svrg_run called with method {}", cfg.method)));
    }
    if x0.len() != sys.n() {
        return Err(Error::Dimension("initial point has the wrong length".into()));
    }
    let m = sys.m();
    let alpha = cfg.svrg_alpha;
    let diag = StepDiagnostics {
        mu: 0.0,
        omega: 0.0,
        alpha,
        beta: 0.0,
        z_branch: Branch::Adaptive,
        x_branch: Branch::Adaptive,
    };
    let mut monitor = Monitor::new(sys, cfg, oracle, &x0)?;
    let mut x = x0;
    let mut variance = Vec::new();
    let mut status = monitor.observe(0, &x, StepDiagnostics::idle())?;
    let mut k = 0;
    while status.is_none() && k < cfg.max_iters {
        let anchor = x.clone();
        let u_anchor = full_gradient(sys, &anchor)?;
        let mut diff = vec![0.0; sys.n()];
        let mut var_acc = 0.0;
        let mut g = vec![0.0; sys.n()];
        for _ in 0..cfg.svrg_inner_n {
            let i = rng.random_range(0..m);
            for ((d, xi), ai) in diff.iter_mut().zip(&x).zip(&anchor) {
                *d = xi - ai;
            }
            let s = sys.a.row_block_apply(&[i], &diff)?[0];
            g.copy_from_slice(&u_anchor);
            let row = sys.a.row_block_transpose_apply(&[i], &[s])?;
            for (gj, rj) in g.iter_mut().zip(&row) {
                *gj += rj;
            }
            if cfg.track_variance {
                let full = full_gradient(sys, &x)?;
                let dev: Vec<f64> = g.iter().zip(&full).map(|(a, b)| a - b).collect();
                var_acc += norm(&dev);
            }
            for (xj, gj) in x.iter_mut().zip(&g) {
                *xj -= alpha * gj;
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalOverflow("SVRG inner loop"));
        }
        if cfg.track_variance {
            variance.push(var_acc / cfg.svrg_inner_n as f64);
        }
        k += 1;
        status = monitor.observe(k, &x, diag)?;
    }
    Ok(RunRecord {
        rows: monitor.rows,
        status: status.unwrap_or(TerminalStatus::MaxIters),
        solution: x,
        variance_proxy: variance,
    })
}
