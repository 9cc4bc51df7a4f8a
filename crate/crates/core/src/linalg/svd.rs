//! Dense SVD used by the oracle and the rate certificates.

use faer::Mat;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `A = U diag(s) Vᵀ` with `s` non-increasing.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn thin_svd(a: &DMatrix<f64>) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(m, 0),
            s: Vec::new(),
            v: DMatrix::zeros(n, 0),
        });
    }
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|_| Error::NumericalOverflow("SVD did not converge"))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let s = s.column_vector();
    Ok(ThinSvd {
        u: DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(n, k, |i, j| v[(i, j)]),
    })
}

/// Singular values in non-increasing order.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows().min(a.ncols()) == 0 {
        return Ok(Vec::new());
    }
    to_faer(a)
        .singular_values()
        .map_err(|_| Error::NumericalOverflow("SVD did not converge"))
}
