#![allow(dead_code)]

use extkaczmarz::harness::{ProblemSpec, RhsSource};
use extkaczmarz::linalg::{min_norm_lsq_oracle, LinearSystem, Matrix, OracleSolution};
use extkaczmarz::sampling::{Axis, Partition, SamplingScheme};
use nalgebra::{DMatrix, DVector};

pub fn inconsistent(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> (LinearSystem, OracleSolution) {
    let sys = ProblemSpec::generated(m, n, r, kappa, seed, RhsSource::Inconsistent { seed: seed + 1 })
        .build()
        .unwrap();
    let oracle = min_norm_lsq_oracle(&sys).unwrap();
    (sys, oracle)
}

pub fn consistent(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> (LinearSystem, OracleSolution) {
    let sys = ProblemSpec::generated(m, n, r, kappa, seed, RhsSource::Consistent { seed: seed + 1 })
        .build()
        .unwrap();
    let oracle = min_norm_lsq_oracle(&sys).unwrap();
    (sys, oracle)
}

pub fn seeded_schemes(a: &Matrix, p: usize, seed: u64) -> (SamplingScheme, SamplingScheme) {
    let rows = Partition::random_seeded(a.nrows(), p, seed).unwrap();
    let cols = Partition::random_seeded(a.ncols(), p, seed + 1).unwrap();
    (
        SamplingScheme::new(a, rows, Axis::Row).unwrap(),
        SamplingScheme::new(a, cols, Axis::Column).unwrap(),
    )
}

pub fn dense(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j))
}

pub fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
