use std::fmt::Write as _;

use super::config::StepDiagnostics;

pub const TRACE_HEADER: &str = "trial,iter,rse,normal_residual,mu,omega,alpha,beta,z_branch,x_branch,elapsed_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalStatus {
    ConvergedRse,
    ConvergedResidual,
    MaxIters,
}

impl TerminalStatus {
    pub fn name(self) -> &'static str {
        match self {
            TerminalStatus::ConvergedRse => "converged_rse",
            TerminalStatus::ConvergedResidual => "converged_residual",
            TerminalStatus::MaxIters => "max_iters",
        }
    }

    pub fn converged(self) -> bool {
        self != TerminalStatus::MaxIters
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRow {
    pub k: usize,
    pub rse: Option<f64>,
    /// `‖Aᵀ(Ax - b)‖₂`, recorded when no oracle is available or a residual
    /// tolerance is set.
    pub normal_residual: Option<f64>,
    pub diagnostics: StepDiagnostics,
    pub elapsed_s: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    /// One row per iteration, starting with the initial point at `k = 0`.
    pub rows: Vec<IterRow>,
    pub status: TerminalStatus,
    pub solution: Vec<f64>,
    /// SVRG with variance tracking: mean `‖g^t - ∇f(x^t)‖` per outer epoch.
    pub variance_proxy: Vec<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl RunRecord {
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn final_rse(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rse)
    }

    pub fn rse_at(&self, k: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.k == k).and_then(|r| r.rse)
    }

    pub fn elapsed_s(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.elapsed_s)
    }

    /// CSV rows (no header) tagged with `trial`.
    pub fn write_csv_rows(&self, trial: usize, out: &mut String) {
        for r in &self.rows {
            let d = &r.diagnostics;
            writeln!(
                out,
                "{trial},{},{},{},{:e},{:e},{:e},{:e},{},{},{}",
                r.k,
                opt(r.rse),
                opt(r.normal_residual),
                d.mu,
                d.omega,
                d.alpha,
                d.beta,
                d.z_branch.code(),
                d.x_branch.code(),
                opt(r.elapsed_s),
            )
            .unwrap();
        }
    }

    /// Full trace CSV with header.
    pub fn to_csv(&self, trial: usize) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        self.write_csv_rows(trial, &mut out);
        out
    }
}
