//! Extended Kaczmarz-type solvers: REK, constant-step REABK, the adaptive
//! step-size method (AREABK), the adaptive heavy-ball momentum method
//! (AmREABK), and an SVRG baseline.

mod config;
mod record;
mod run;
mod steps;
mod svrg;

pub use config::{Branch, Method, SolverConfig, StepDiagnostics};
pub use record::{IterRow, RunRecord, TerminalStatus, TRACE_HEADER};
pub use run::{run_solver, run_solver_from, ExtendedSolver, SolverState, StepReport};
pub use steps::{
    adaptive_x_step, adaptive_z_step, initial_h, momentum_x_step, momentum_z_step, reabk_const_step,
    MomentumXStep, MomentumZStep, XStep, ZStep, TAU_PAR, TAU_ZERO,
};
pub use svrg::{full_gradient, svrg_default_inner, svrg_default_step, svrg_run};
