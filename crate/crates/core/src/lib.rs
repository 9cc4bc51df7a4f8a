//! Randomized extended Kaczmarz-type solvers for the minimum-norm
//! least-squares solution `A†b` of an arbitrary linear system, with block
//! sampling, adaptive step sizes, adaptive heavy-ball momentum, rate
//! certificates, and an experiment harness.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{min_norm_lsq_oracle, LinearSystem, Matrix, OracleSolution};
pub use sampling::{Axis, Partition, SamplingScheme};
pub use solvers::{run_solver, ExtendedSolver, Method, RunRecord, SolverConfig, TerminalStatus};
pub use theory::{compute_rates, BoundsConfig, TheoryBounds};
