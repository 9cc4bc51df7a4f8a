//! Convergence-rate certificates and exactness diagnostics computed from a
//! matrix and its sampling schemes.
//!
//! With index-selector sampling matrices `S = I[:, I] / ‖A[I, :]‖_F`, every
//! expectation below is a diagonal matrix:
//!
//! * `H  = E[S Sᵀ / ‖AᵀS‖₂²]` has entry `p_I / σ²_max(A[I, :])` on the rows of `I`
//!   (with `p_I` the block probability),
//! * `M  = E[S Sᵀ]` has entry `p_I / ‖A[I, :]‖_F²`,
//!
//! and likewise `H̄`, `M̄` for column blocks. They are still returned as dense
//! matrices; everything here is desk scale.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{rank_cut, singular_values, Matrix};
use crate::sampling::{Axis, Partition, SamplingScheme};

pub const DEFAULT_MAX_DIM: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsConfig {
    pub eta: f64,
    pub zeta: f64,
    pub eps: f64,
    /// Largest `max(m, n)` accepted.
    pub max_dim: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            zeta: 1.0,
            eps: 1.0,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl BoundsConfig {
    pub fn new(eta: f64, zeta: f64, eps: f64) -> Self {
        Self {
            eta,
            zeta,
            eps,
            ..Self::default()
        }
    }

    /// Checks `η, ζ ∈ (0, 2)`, `ε ∈ (0, 1]`, and `ε < ζ / (1 - ζ)` when `ζ ≤ 1/2`.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 2.0) {
            return Err(Error::Config(format!("eta = {} must lie in (0, 2)", self.eta)));
        }
        let bad = |reason: &str| Error::Inadmissible {
            zeta: self.zeta,
            eps: self.eps,
            reason: reason.to_string(),
        };
        if !(self.zeta > 0.0 && self.zeta < 2.0) {
            return Err(bad("zeta must lie in (0, 2)"));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(bad("eps must lie in (0, 1]"));
        }
        if self.zeta <= 0.5 && self.eps >= self.zeta / (1.0 - self.zeta) {
            return Err(bad("zeta in (0, 1/2] requires eps < zeta / (1 - zeta)"));
        }
        Ok(())
    }
}

pub fn c_zeta_eps(zeta: f64, eps: f64) -> f64 {
    if zeta < 1.0 {
        (2.0 - zeta) * (1.0 - (1.0 + eps) * (1.0 - zeta))
    } else {
        (2.0 - zeta) * (1.0 + (1.0 - eps) * (zeta - 1.0))
    }
}

pub fn d_zeta_eps(zeta: f64, eps: f64) -> f64 {
    if zeta < 1.0 {
        (2.0 - zeta) * (1.0 + (1.0 / eps + 1.0) * (1.0 - zeta))
    } else {
        (2.0 - zeta) * (1.0 + (1.0 / eps - 1.0) * (zeta - 1.0))
    }
}

/// `(H, H̄, M, M̄)`
#[derive(Clone, Debug)]
pub struct SchemeMatrices {
    pub h: DMatrix<f64>,
    pub h_bar: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub m_bar: DMatrix<f64>,
}

fn check_schemes(a: &Matrix, rows: &SamplingScheme, cols: &SamplingScheme, max_dim: usize) -> Result<()> {
    if rows.axis() != Axis::Row || cols.axis() != Axis::Column {
        return Err(Error::Config("expected a row scheme and a column scheme".into()));
    }
    if rows.partition().dim() != a.nrows() || cols.partition().dim() != a.ncols() {
        return Err(Error::Dimension("sampling schemes do not match the matrix".into()));
    }
    if a.nrows().max(a.ncols()) > max_dim {
        return Err(Error::TooLarge(format!(
            "{}x{} exceeds the theory cap of {max_dim}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn row_block_dense(a: &Matrix, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, j| a.get(rows[r], j))
}

fn col_block_dense(a: &Matrix, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, c| a.get(i, cols[c]))
}

/// Largest singular value and smallest one above the rank cut (0 if none).
fn extreme_singular_values(mat: DMatrix<f64>) -> (f64, f64) {
    let (r, c) = mat.shape();
    let sv = singular_values(&mat).expect("SVD of a finite matrix");
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rank_cut(r, c, smax);
    let smin = sv.iter().rev().copied().find(|&s| s > cut && s > 0.0).unwrap_or(0.0);
    (smax, smin)
}

/// Per-block `σ_max²` of the sampled submatrices (0 for empty/zero blocks).
fn block_sigma_max_sq(a: &Matrix, scheme: &SamplingScheme) -> Vec<f64> {
    scheme
        .partition()
        .blocks()
        .iter()
        .zip(scheme.block_fro_norms_sq())
        .map(|(blk, &fro)| {
            if fro <= 0.0 {
                return 0.0;
            }
            let sub = match scheme.axis() {
                Axis::Row => row_block_dense(a, blk),
                Axis::Column => col_block_dense(a, blk),
            };
            let (smax, _) = extreme_singular_values(sub);
            smax * smax
        })
        .collect()
}

fn expectation_diagonals(scheme: &SamplingScheme, sigma_max_sq: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = scheme.partition().dim();
    let mut h = vec![0.0; dim];
    let mut m = vec![0.0; dim];
    for (draw, prob) in scheme.support() {
        let smax2 = sigma_max_sq[draw.block_id];
        for &i in draw.indices {
            m[i] += prob / draw.fro_norm_sq;
            if smax2 > 0.0 {
                h[i] += prob / smax2;
            }
        }
    }
    (h, m)
}

pub fn compute_h_matrices(a: &Matrix, rows: &SamplingScheme, cols: &SamplingScheme) -> Result<SchemeMatrices> {
    check_schemes(a, rows, cols, DEFAULT_MAX_DIM)?;
    let (h, m) = expectation_diagonals(rows, &block_sigma_max_sq(a, rows));
    let (h_bar, m_bar) = expectation_diagonals(cols, &block_sigma_max_sq(a, cols));
    let diag = |v: Vec<f64>| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v));
    Ok(SchemeMatrices {
        h: diag(h),
        h_bar: diag(h_bar),
        m: diag(m),
        m_bar: diag(m_bar),
    })
}

/// Squared smallest nonzero singular value of `diag(sqrt(w_row)) A diag(sqrt(w_col))`.
fn sigma2_min_weighted(a: &Matrix, row_w: Option<&[f64]>, col_w: Option<&[f64]>) -> f64 {
    let mut dense = a.to_nalgebra();
    if let Some(w) = row_w {
        for (i, wi) in w.iter().enumerate() {
            dense.row_mut(i).scale_mut(wi.sqrt());
        }
    }
    if let Some(w) = col_w {
        for (j, wj) in w.iter().enumerate() {
            dense.column_mut(j).scale_mut(wj.sqrt());
        }
    }
    let (_, smin) = extreme_singular_values(dense);
    smin * smin
}

/// `Λ_min`: minimum over nonzero row blocks of `σ²_min(A_I) / σ²_max(A_I)`.
pub fn lambda_min(a: &Matrix, rows: &SamplingScheme) -> f64 {
    rows.support()
        .filter_map(|(draw, _)| {
            let (smax, smin) = extreme_singular_values(row_block_dense(a, draw.indices));
            (smax > 0.0).then(|| (smin / smax).powi(2))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Block ratios of the REABK comparison rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReabkRates {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub gamma_min_i: f64,
    pub gamma_max_i: f64,
    pub gamma_max_j: f64,
    pub psi_max: f64,
}

pub fn compute_reabk_rates(a: &Matrix, row_part: &Partition, col_part: &Partition) -> Result<ReabkRates> {
    if row_part.dim() != a.nrows() || col_part.dim() != a.ncols() {
        return Err(Error::Dimension("partitions do not match the matrix".into()));
    }
    let fro = a.frobenius_norm_sq();
    if fro == 0.0 {
        return Err(Error::DegenerateSampling);
    }
    let (_, smin_a) = extreme_singular_values(a.to_nalgebra());
    let ratio = smin_a * smin_a / fro;

    let mut gamma_min_i = f64::INFINITY;
    let mut gamma_max_i: f64 = 0.0;
    let mut psi_max: f64 = 0.0;
    for blk in row_part.blocks() {
        let sub = row_block_dense(a, blk);
        let bf = sub.norm_squared();
        if bf == 0.0 {
            continue;
        }
        let (smax, smin) = extreme_singular_values(sub);
        gamma_min_i = gamma_min_i.min(smin * smin / bf);
        gamma_max_i = gamma_max_i.max(smax * smax / bf);
        psi_max = psi_max.max(bf / (smax * smax));
    }
    let mut gamma_max_j: f64 = 0.0;
    for blk in col_part.blocks() {
        let sub = col_block_dense(a, blk);
        let bf = sub.norm_squared();
        if bf == 0.0 {
            continue;
        }
        let (smax, _) = extreme_singular_values(sub);
        gamma_max_j = gamma_max_j.max(smax * smax / bf);
    }
    let rho1 = 1.0 - ratio / gamma_max_i;
    let rho2 = 1.0 - ratio / gamma_max_j;
    Ok(ReabkRates {
        rho1,
        rho2,
        rho3: rho1.max(rho2),
        gamma_min_i,
        gamma_max_i,
        gamma_max_j,
        psi_max,
    })
}

/// `max_blocks σ²_max(block) / ‖block‖_F²` over a row or column partition.
pub fn block_gamma_max(a: &Matrix, part: &Partition, axis: Axis) -> f64 {
    part.blocks()
        .iter()
        .filter_map(|blk| {
            let sub = match axis {
                Axis::Row => row_block_dense(a, blk),
                Axis::Column => col_block_dense(a, blk),
            };
            let bf = sub.norm_squared();
            (bf > 0.0).then(|| {
                let (smax, _) = extreme_singular_values(sub);
                smax * smax / bf
            })
        })
        .fold(0.0, f64::max)
}

/// `γ = λ_max(H) / Λ_min + 1 / σ²_min(A)`
pub fn gamma_bound(a: &Matrix, rows: &SamplingScheme) -> Result<f64> {
    if rows.axis() != Axis::Row || rows.partition().dim() != a.nrows() {
        return Err(Error::Config("expected a row scheme over A".into()));
    }
    let (h, _) = expectation_diagonals(rows, &block_sigma_max_sq(a, rows));
    let lmax_h = h.iter().cloned().fold(0.0, f64::max);
    let (_, smin) = extreme_singular_values(a.to_nalgebra());
    if smin == 0.0 {
        return Err(Error::DegenerateSampling);
    }
    Ok(lmax_h / lambda_min(a, rows) + 1.0 / (smin * smin))
}

#[derive(Clone, Debug)]
pub struct TheoryBounds {
    pub config: BoundsConfig,
    pub h: DMatrix<f64>,
    pub h_bar: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub m_bar: DMatrix<f64>,
    pub lambda_max_h: f64,
    pub lambda_min: f64,
    /// `σ²_min(H̄^{1/2} Aᵀ)`
    pub sigma2_hbar_at: f64,
    /// `σ²_min(H^{1/2} A)`
    pub sigma2_h_a: f64,
    pub sigma_min_a: f64,
    pub fro_sq: f64,
    pub rho_z: f64,
    pub rho_x: f64,
    pub rho: f64,
    /// Momentum-method factors (the `η = ζ = 1` forms).
    pub rho_hat_z: f64,
    pub rho_hat_x: f64,
    pub rho_hat: f64,
    pub c_zeta_eps: f64,
    pub d_zeta_eps: f64,
    pub gamma: f64,
    pub reabk: ReabkRates,
}

pub fn compute_rates(
    a: &Matrix,
    rows: &SamplingScheme,
    cols: &SamplingScheme,
    cfg: &BoundsConfig,
) -> Result<TheoryBounds> {
    cfg.validate()?;
    check_schemes(a, rows, cols, cfg.max_dim)?;
    let row_smax = block_sigma_max_sq(a, rows);
    let col_smax = block_sigma_max_sq(a, cols);
    let (h, m) = expectation_diagonals(rows, &row_smax);
    let (h_bar, m_bar) = expectation_diagonals(cols, &col_smax);

    let sigma2_hbar_at = sigma2_min_weighted(a, None, Some(&h_bar));
    let sigma2_h_a = sigma2_min_weighted(a, Some(&h), None);
    let (_, sigma_min_a) = extreme_singular_values(a.to_nalgebra());
    let lambda_max_h = h.iter().cloned().fold(0.0, f64::max);
    let lam_min = lambda_min(a, rows);

    let c = c_zeta_eps(cfg.zeta, cfg.eps);
    let d = d_zeta_eps(cfg.zeta, cfg.eps);
    let rho_z = 1.0 - cfg.eta * (2.0 - cfg.eta) * sigma2_hbar_at;
    let rho_x = 1.0 - c * sigma2_h_a;
    let rho_hat_z = 1.0 - sigma2_hbar_at;
    let rho_hat_x = 1.0 - sigma2_h_a;
    let gamma = if sigma_min_a > 0.0 {
        lambda_max_h / lam_min + 1.0 / (sigma_min_a * sigma_min_a)
    } else {
        f64::INFINITY
    };
    let reabk = compute_reabk_rates(a, rows.partition(), cols.partition())?;
    let diag = |v: Vec<f64>| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v));
    Ok(TheoryBounds {
        config: *cfg,
        h: diag(h),
        h_bar: diag(h_bar),
        m: diag(m),
        m_bar: diag(m_bar),
        lambda_max_h,
        lambda_min: lam_min,
        sigma2_hbar_at,
        sigma2_h_a,
        sigma_min_a,
        fro_sq: a.frobenius_norm_sq(),
        rho_z,
        rho_x,
        rho: rho_z.max(rho_x),
        rho_hat_z,
        rho_hat_x,
        rho_hat: rho_hat_z.max(rho_hat_x),
        c_zeta_eps: c,
        d_zeta_eps: d,
        gamma,
        reabk,
    })
}

impl TheoryBounds {
    /// Expected-error bound of the adaptive step-size method after `k` steps,
    /// given `‖x⁰ - A†b‖²` and `‖z⁰ - b_⊥‖²`.
    pub fn adaptive_bound(&self, k: usize, x0_err_sq: f64, z0_err_sq: f64) -> f64 {
        let sep = (1.0 - self.rho_x / self.rho_z).abs().max(1.0 / k.max(1) as f64);
        let coupling = self.d_zeta_eps * self.lambda_max_h / (self.lambda_min * sep);
        self.rho.powi(k as i32) * (x0_err_sq + coupling * z0_err_sq)
    }

    /// The `η = ζ = 1` specialization written with
    /// `Γ_k = max{|σ̄² - σ²| / (1 - σ̄²), 1/k}`.
    pub fn unit_relaxation_bound(&self, k: usize, x0_err_sq: f64, z0_err_sq: f64) -> f64 {
        let gamma_k = ((self.sigma2_hbar_at - self.sigma2_h_a).abs() / (1.0 - self.sigma2_hbar_at))
            .max(1.0 / k.max(1) as f64);
        let rho = 1.0 - self.sigma2_hbar_at.min(self.sigma2_h_a);
        rho.powi(k as i32) * (x0_err_sq + self.lambda_max_h / (self.lambda_min * gamma_k) * z0_err_sq)
    }

    /// Expected-error bound of the momentum method after `k` steps.
    pub fn momentum_bound(&self, k: usize, x0_err_sq: f64, z0_err_sq: f64) -> f64 {
        let sep = (1.0 - self.rho_hat_x / self.rho_hat_z).abs().max(1.0 / k.max(1) as f64);
        self.rho_hat.powi(k as i32) * (x0_err_sq + self.gamma / sep * z0_err_sq)
    }

    /// Flat `key=value` report, one entry per line.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: f64| writeln!(out, "{k}={v:e}").unwrap();
        kv("eta", self.config.eta);
        kv("zeta", self.config.zeta);
        kv("eps", self.config.eps);
        kv("fro_sq", self.fro_sq);
        kv("sigma_min_a", self.sigma_min_a);
        kv("lambda_max_h", self.lambda_max_h);
        kv("lambda_min", self.lambda_min);
        kv("sigma2_min_hbar_at", self.sigma2_hbar_at);
        kv("sigma2_min_h_a", self.sigma2_h_a);
        kv("c_zeta_eps", self.c_zeta_eps);
        kv("d_zeta_eps", self.d_zeta_eps);
        kv("rho_z", self.rho_z);
        kv("rho_x", self.rho_x);
        kv("rho", self.rho);
        kv("rho_hat_z", self.rho_hat_z);
        kv("rho_hat_x", self.rho_hat_x);
        kv("rho_hat", self.rho_hat);
        kv("gamma", self.gamma);
        kv("rho1", self.reabk.rho1);
        kv("rho2", self.reabk.rho2);
        kv("rho3", self.reabk.rho3);
        kv("gamma_min_i", self.reabk.gamma_min_i);
        kv("gamma_max_i", self.reabk.gamma_max_i);
        kv("gamma_max_j", self.reabk.gamma_max_j);
        kv("psi_max", self.reabk.psi_max);
        out
    }
}

/// Result of the positive-definiteness test on `M = E[SSᵀ]` and `M̄ = E[TTᵀ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exactness {
    pub sufficient: bool,
    pub lambda_min_m: f64,
    pub lambda_min_m_bar: f64,
}

/// True iff both `M` and `M̄` are numerically positive definite
/// (`λ_min > 1e-12 · trace`).
pub fn check_exactness_sufficient(rows: &SamplingScheme, cols: &SamplingScheme) -> Exactness {
    let lam = |s: &SamplingScheme| {
        let (_, m) = expectation_diagonals(s, &vec![0.0; s.num_blocks()]);
        let trace: f64 = m.iter().sum();
        let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
        (min, min > 1e-12 * trace)
    };
    let (lm, ok_m) = lam(rows);
    let (lmb, ok_mb) = lam(cols);
    Exactness {
        sufficient: ok_m && ok_mb,
        lambda_min_m: lm,
        lambda_min_m_bar: lmb,
    }
}

/// `g(z) = E[½‖TᵀAᵀz‖²]` and `f(x, z) = E[½‖Sᵀ(Ax - (b - z))‖²]`.
pub fn eval_g_f(
    a: &Matrix,
    b: &[f64],
    rows: &SamplingScheme,
    cols: &SamplingScheme,
    x: &[f64],
    z: &[f64],
) -> Result<(f64, f64)> {
    if b.len() != a.nrows() || z.len() != a.nrows() || x.len() != a.ncols() {
        return Err(Error::Dimension("eval_g_f vector lengths".into()));
    }
    let mut g = 0.0;
    for (draw, prob) in cols.support() {
        let t = a.col_block_transpose_apply(draw.indices, z)?;
        g += prob * 0.5 * crate::linalg::norm_sq(&t) / draw.fro_norm_sq;
    }
    let mut f = 0.0;
    for (draw, prob) in rows.support() {
        let mut r = a.row_block_apply(draw.indices, x)?;
        for (ri, &i) in r.iter_mut().zip(draw.indices) {
            *ri += z[i] - b[i];
        }
        f += prob * 0.5 * crate::linalg::norm_sq(&r) / draw.fro_norm_sq;
    }
    Ok((g, f))
}
