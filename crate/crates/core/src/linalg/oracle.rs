//! Direct (SVD-based) reference solution for desk-scale systems.

use nalgebra::{DMatrix, DVector};

use super::matrix::{LinearSystem, Matrix};
use crate::error::{Error, Result};

/// Largest `min(m, n)` the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 5000;

/// `A†b` and `b_{Range(A)⊥}` computed from a full SVD.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub x_star: Vec<f64>,
    pub b_perp: Vec<f64>,
    pub rank: usize,
    /// Smallest singular value above the rank cut (0 when the rank is 0).
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Numerical rank threshold `max(m, n) * eps * sigma_max`.
pub fn rank_cut(m: usize, n: usize, sigma_max: f64) -> f64 {
    m.max(n) as f64 * f64::EPSILON * sigma_max
}

/// Thin SVD factors restricted to the numerical range of `A`.
pub(crate) struct RangeBasis {
    /// `m x r`
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// `n x r`
    pub v: DMatrix<f64>,
    pub sigma_max: f64,
}

pub(crate) fn range_basis(a: &Matrix) -> Result<RangeBasis> {
    let (m, n) = (a.nrows(), a.ncols());
    if m.min(n) > ORACLE_MAX_DIM {
        return Err(Error::TooLarge(format!(
            "{m}x{n} exceeds the SVD oracle cap of {ORACLE_MAX_DIM}"
        )));
    }
    let svd = super::thin_svd(&a.to_nalgebra())?;
    let sigma_max = svd.s.first().copied().unwrap_or(0.0);
    let tau = rank_cut(m, n, sigma_max);
    let r = svd.s.iter().take_while(|&&s| s > tau && s > 0.0).count();
    let u = svd.u.columns(0, r).into_owned();
    let v = svd.v.columns(0, r).into_owned();
    let sigma = svd.s[..r].to_vec();
    Ok(RangeBasis { u, sigma, v, sigma_max })
}

/// Computes `A†b` by SVD with the rank cut of [`rank_cut`], and
/// `b_perp = b - A A† b`.
pub fn min_norm_lsq_oracle(sys: &LinearSystem) -> Result<OracleSolution> {
    if !sys.b.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let basis = range_basis(&sys.a)?;
    let b = DVector::from_column_slice(&sys.b);
    let coeff = basis.u.transpose() * &b;
    let scaled = DVector::from_iterator(
        coeff.len(),
        coeff.iter().zip(&basis.sigma).map(|(c, s)| c / s),
    );
    let x_star = &basis.v * scaled;
    let b_range = &basis.u * coeff;
    let b_perp = b - b_range;
    Ok(OracleSolution {
        x_star: x_star.as_slice().to_vec(),
        b_perp: b_perp.as_slice().to_vec(),
        rank: basis.sigma.len(),
        sigma_min: basis.sigma.iter().cloned().fold(f64::INFINITY, f64::min).min(basis.sigma_max),
        sigma_max: basis.sigma_max,
    })
}

/// Dense Moore-Penrose pseudoinverse with the same rank cut as the oracle.
pub fn pseudo_inverse(a: &Matrix) -> Result<DMatrix<f64>> {
    let basis = range_basis(a)?;
    let mut vs = basis.v.clone();
    for (c, s) in basis.sigma.iter().enumerate() {
        vs.column_mut(c).scale_mut(1.0 / s);
    }
    Ok(vs * basis.u.transpose())
}
