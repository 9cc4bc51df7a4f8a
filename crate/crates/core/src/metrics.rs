//! Error metrics shared by the solvers and the experiment harness.

use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::solvers::RunRecord;

/// Relative solution error `‖x - x*‖² / ‖x⁰ - x*‖²`.
///
/// A zero denominator yields 0 when the numerator is also zero, and an
/// error otherwise.
pub fn rse(x: &[f64], x_star: &[f64], x0: &[f64]) -> Result<f64> {
    let num = dist_sq(x, x_star);
    let den = dist_sq(x0, x_star);
    if den == 0.0 {
        return if num == 0.0 { Ok(0.0) } else { Err(Error::UndefinedRse) };
    }
    Ok(num / den)
}

/// `RSE(K)^(1/K)`, the empirical per-iteration contraction factor.
pub fn actual_convergence_factor(record: &RunRecord, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("convergence factor needs K >= 1".into()));
    }
    let r = record
        .rse_at(k)
        .ok_or_else(|| Error::Config(format!("record has no RSE at iteration {k}")))?;
    Ok(convergence_factor_from_rse(r, k))
}

pub fn convergence_factor_from_rse(rse: f64, k: usize) -> f64 {
    rse.powf(1.0 / k as f64)
}

/// Quantile by linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample). NaNs are rejected.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(Summary {
        median: quantile(&v, 0.5),
        q25: quantile(&v, 0.25),
        q75: quantile(&v, 0.75),
        min: v[0],
        max: v[v.len() - 1],
    })
}

pub fn median(values: &[f64]) -> f64 {
    summarize(values).map_or(f64::NAN, |s| s.median)
}
