//! Test-problem generation: Gaussian `U D Vᵀ` matrices with prescribed rank
//! and condition bound, and consistent or inconsistent right-hand sides.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_norm_lsq_oracle, norm, LinearSystem, Matrix};
use crate::rng::rng_from_seed;

use super::mtx;

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// `A = U D Vᵀ` with `U` (m×r), `V` (n×r) orthonormalized Gaussian matrices
/// and `D = diag(1 + (κ - 1)·rand)`.
pub fn gen_gaussian_udv<R: Rng + ?Sized>(m: usize, n: usize, r: usize, kappa: f64, rng: &mut R) -> Result<Matrix> {
    if r == 0 || r > m.min(n) {
        return Err(Error::Config(format!("rank r = {r} must lie in [1, min(m, n)] = [1, {}]", m.min(n))));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::Config(format!("kappa = {kappa} must be >= 1")));
    }
    let u = gaussian_matrix(m, r, rng).qr().q();
    let v = gaussian_matrix(n, r, rng).qr().q();
    let d: Vec<f64> = (0..r).map(|_| 1.0 + (kappa - 1.0) * rng.random::<f64>()).collect();
    let mut ud = u;
    for (j, dj) in d.iter().enumerate() {
        ud.column_mut(j).scale_mut(*dj);
    }
    Matrix::from_nalgebra(&(ud * v.transpose()))
}

/// `b = A x̄` with standard Gaussian `x̄`.
pub fn gen_consistent_rhs<R: Rng + ?Sized>(a: &Matrix, rng: &mut R) -> Result<Vec<f64>> {
    let x_bar = gaussian_vector(a.ncols(), rng);
    a.apply(&x_bar)
}

/// `b = A x̄ + b_e` where `b_e` is the projection of a Gaussian vector onto
/// `Null(Aᵀ)`.
pub fn gen_inconsistent_rhs<R: Rng + ?Sized>(a: &Matrix, rng: &mut R) -> Result<Vec<f64>> {
    let x_bar = gaussian_vector(a.ncols(), rng);
    let mut b = a.apply(&x_bar)?;
    for _ in 0..10 {
        let w = gaussian_vector(a.nrows(), rng);
        let w_norm = norm(&w);
        let proj = min_norm_lsq_oracle(&LinearSystem::new(a.clone(), w)?)?;
        if proj.rank >= a.nrows() {
            return Err(Error::TrivialLeftNullSpace);
        }
        if norm(&proj.b_perp) > 1e-12 * w_norm {
            for (bi, ei) in b.iter_mut().zip(&proj.b_perp) {
                *bi += ei;
            }
            return Ok(b);
        }
    }
    Err(Error::TrivialLeftNullSpace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixSource {
    Generated { m: usize, n: usize, r: usize, kappa: f64, seed: u64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RhsSource {
    Inconsistent { seed: u64 },
    Consistent { seed: u64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub source: MatrixSource,
    pub rhs: RhsSource,
}

impl ProblemSpec {
    pub fn generated(m: usize, n: usize, r: usize, kappa: f64, seed: u64, rhs: RhsSource) -> Self {
        Self {
            source: MatrixSource::Generated { m, n, r, kappa, seed },
            rhs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let MatrixSource::Generated { m, n, r, kappa, .. } = self.source {
            if m == 0 || n == 0 || r == 0 || r > m.min(n) {
                return Err(Error::Config(format!("invalid generated shape ({m}, {n}, {r})")));
            }
            if kappa.is_nan() || kappa < 1.0 {
                return Err(Error::Config(format!("kappa = {kappa} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn build_matrix(&self) -> Result<Matrix> {
        self.validate()?;
        match &self.source {
            MatrixSource::Generated { m, n, r, kappa, seed } => {
                gen_gaussian_udv(*m, *n, *r, *kappa, &mut rng_from_seed(*seed))
            }
            MatrixSource::File { path } => mtx::read_matrix_market(path),
        }
    }

    pub fn build(&self) -> Result<LinearSystem> {
        let a = self.build_matrix()?;
        let b = match &self.rhs {
            RhsSource::Inconsistent { seed } => gen_inconsistent_rhs(&a, &mut rng_from_seed(*seed))?,
            RhsSource::Consistent { seed } => gen_consistent_rhs(&a, &mut rng_from_seed(*seed))?,
            RhsSource::File { path } => mtx::read_vector(path)?,
        };
        LinearSystem::new(a, b)
    }
}
