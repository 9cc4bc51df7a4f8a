//! Matrix storage, block products, and the direct least-squares oracle.

mod matrix;
mod oracle;
mod svd;
mod vector;

pub use matrix::{CsrMatrix, DenseMatrix, LinearSystem, Matrix};
pub use oracle::{min_norm_lsq_oracle, pseudo_inverse, rank_cut, OracleSolution, ORACLE_MAX_DIM};
pub(crate) use svd::{singular_values, thin_svd};
pub use vector::{all_finite, axpy, dist_sq, dot, norm, norm_sq, scale, sub};
