//! Single-step updates of the extended iterative methods.
//!
//! Notation: a column draw `T` selects `A[:, J]` scaled by `1/‖A[:, J]‖_F`,
//! a row draw `S` selects rows `I` scaled by `1/‖A[I, :]‖_F`. The `z`
//! sequence drives `z → b_{Range(A)⊥}`; the `x` sequence solves
//! `Ax = b - z` and tends to `A†b`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm, norm_sq, Matrix};
use crate::sampling::BlockDraw;

use super::config::Branch;

/// Relative zero threshold for sampled sub-residuals.
pub const TAU_ZERO: f64 = 1e2 * f64::EPSILON;
/// Relative Gram-determinant threshold below which the momentum plane is
/// treated as degenerate.
pub const TAU_PAR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ZStep {
    pub z: Vec<f64>,
    pub mu: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug)]
pub struct XStep {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub branch: Branch,
    /// `S_kᵀ(Ax - (b - z_next))`, one entry per sampled row.
    pub u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MomentumZStep {
    pub z: Vec<f64>,
    pub mu: f64,
    pub omega: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug)]
pub struct MomentumXStep {
    pub x: Vec<f64>,
    /// Satisfies `x_next - x = Aᵀ h_next`.
    pub h: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub branch: Branch,
}

fn is_zero(v: &[f64], scale: f64) -> bool {
    norm(v) <= TAU_ZERO * scale.max(1.0)
}

fn finite_or(v: Vec<f64>, what: &'static str) -> Result<Vec<f64>> {
    if all_finite(&v) {
        Ok(v)
    } else {
        Err(Error::NumericalOverflow(what))
    }
}

/// `t = T_kᵀAᵀz` and `p = A T_k t`, or `None` if `t` is numerically zero.
fn z_direction(a: &Matrix, z: &[f64], draw: &BlockDraw<'_>) -> Result<Option<(f64, Vec<f64>)>> {
    if draw.fro_norm_sq <= 0.0 {
        return Ok(None);
    }
    let inv = 1.0 / draw.fro_norm_sq.sqrt();
    let mut t = a.col_block_transpose_apply(draw.indices, z)?;
    t.iter_mut().for_each(|v| *v *= inv);
    if is_zero(&t, norm(z)) {
        return Ok(None);
    }
    let mut p = a.col_block_apply(draw.indices, &t)?;
    p.iter_mut().for_each(|v| *v *= inv);
    Ok(Some((norm_sq(&t), p)))
}

/// `u = S_kᵀ(Ax - (b - z_next))` and `q = Aᵀ S_k u`, or `None` if `u` is
/// numerically zero.
fn x_direction(
    a: &Matrix,
    x: &[f64],
    b_minus_znext: &[f64],
    draw: &BlockDraw<'_>,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    if draw.fro_norm_sq <= 0.0 {
        return Ok(None);
    }
    if b_minus_znext.len() != a.nrows() {
        return Err(Error::Dimension("b - z has the wrong length".into()));
    }
    let inv = 1.0 / draw.fro_norm_sq.sqrt();
    let mut u = a.row_block_apply(draw.indices, x)?;
    for (ui, &i) in u.iter_mut().zip(draw.indices) {
        *ui = (*ui - b_minus_znext[i]) * inv;
    }
    if is_zero(&u, norm(x)) {
        return Ok(None);
    }
    let mut q = a.row_block_transpose_apply(draw.indices, &u)?;
    q.iter_mut().for_each(|v| *v *= inv);
    Ok(Some((u, q)))
}

/// Adds `c * S_k u` (length `m`) into `h`.
fn scatter_su(h: &mut [f64], c: f64, u: &[f64], draw: &BlockDraw<'_>) {
    let inv = 1.0 / draw.fro_norm_sq.sqrt();
    for (&i, ui) in draw.indices.iter().zip(u) {
        h[i] += c * ui * inv;
    }
}

/// Adaptive `z` update: `μ = (2 - η) ‖t‖² / ‖p‖²`, `z_next = z - μ p`.
pub fn adaptive_z_step(a: &Matrix, z: &[f64], draw: &BlockDraw<'_>, eta: f64) -> Result<ZStep> {
    let Some((tn2, p)) = z_direction(a, z, draw)? else {
        return Ok(ZStep {
            z: z.to_vec(),
            mu: 0.0,
            branch: Branch::Frozen,
        });
    };
    let mu = (2.0 - eta) * tn2 / norm_sq(&p);
    let z_next = z.iter().zip(&p).map(|(zi, pi)| zi - mu * pi).collect();
    Ok(ZStep {
        z: finite_or(z_next, "adaptive z step")?,
        mu,
        branch: Branch::Adaptive,
    })
}

/// Adaptive `x` update: `α = (2 - ζ) ‖u‖² / ‖q‖²`, `x_next = x - α q`.
pub fn adaptive_x_step(
    a: &Matrix,
    x: &[f64],
    b_minus_znext: &[f64],
    draw: &BlockDraw<'_>,
    zeta: f64,
) -> Result<XStep> {
    let Some((u, q)) = x_direction(a, x, b_minus_znext, draw)? else {
        return Ok(XStep {
            x: x.to_vec(),
            alpha: 0.0,
            branch: Branch::Frozen,
            u: vec![0.0; draw.indices.len()],
        });
    };
    let alpha = (2.0 - zeta) * norm_sq(&u) / norm_sq(&q);
    let x_next = x.iter().zip(&q).map(|(xi, qi)| xi - alpha * qi).collect();
    Ok(XStep {
        x: finite_or(x_next, "adaptive x step")?,
        alpha,
        branch: Branch::Adaptive,
        u,
    })
}

/// Heavy-ball `z` update with `(μ, ω)` minimizing `‖z_next - b_{Range(A)⊥}‖`
/// over `z + span{p, z - z_prev}`; falls back to the adaptive step (`η = 1`)
/// when the plane is degenerate.
pub fn momentum_z_step(a: &Matrix, z: &[f64], z_prev: &[f64], draw: &BlockDraw<'_>) -> Result<MomentumZStep> {
    let Some((tn2, p)) = z_direction(a, z, draw)? else {
        return Ok(MomentumZStep {
            z: z.to_vec(),
            mu: 0.0,
            omega: 0.0,
            branch: Branch::Frozen,
        });
    };
    let d: Vec<f64> = z.iter().zip(z_prev).map(|(a, b)| a - b).collect();
    let pn2 = norm_sq(&p);
    let dn2 = norm_sq(&d);
    let pd = dot(&p, &d);
    let gram = pn2 * dn2 - pd * pd;
    let (mu, omega, branch) = if gram <= TAU_PAR * pn2 * dn2 {
        (tn2 / pn2, 0.0, Branch::Adaptive)
    } else {
        (dn2 * tn2 / gram, pd * tn2 / gram, Branch::Momentum)
    };
    let z_next = z
        .iter()
        .zip(&p)
        .zip(&d)
        .map(|((zi, pi), di)| zi - mu * pi + omega * di)
        .collect();
    Ok(MomentumZStep {
        z: finite_or(z_next, "momentum z step")?,
        mu,
        omega,
        branch,
    })
}

/// Heavy-ball `x` update with `(α, β)` making `x_next` the orthogonal
/// projection of `A†(b - z_next)` onto `x + span{q, x - x_prev}`.
///
/// The unknown `⟨x - x_prev, x - A†(b - z_next)⟩` is evaluated as
/// `⟨h, z_next - z_curr⟩`, which needs `x - x_prev = Aᵀh` on entry.
#[allow(clippy::too_many_arguments)]
pub fn momentum_x_step(
    a: &Matrix,
    x: &[f64],
    x_prev: &[f64],
    h: &[f64],
    b: &[f64],
    z_next: &[f64],
    z_curr: &[f64],
    draw: &BlockDraw<'_>,
) -> Result<MomentumXStep> {
    let m = a.nrows();
    if h.len() != m || b.len() != m || z_next.len() != m || z_curr.len() != m {
        return Err(Error::Dimension("momentum x step vectors must have length m".into()));
    }
    let b_minus_znext: Vec<f64> = b.iter().zip(z_next).map(|(bi, zi)| bi - zi).collect();
    let Some((u, q)) = x_direction(a, x, &b_minus_znext, draw)? else {
        return Ok(MomentumXStep {
            x: x.to_vec(),
            h: vec![0.0; m],
            alpha: 0.0,
            beta: 0.0,
            branch: Branch::Frozen,
        });
    };
    let d: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
    let un2 = norm_sq(&u);
    let qn2 = norm_sq(&q);
    let dn2 = norm_sq(&d);
    let qd = dot(&q, &d);
    let gram = qn2 * dn2 - qd * qd;

    let (alpha, beta, branch) = if gram <= TAU_PAR * qn2 * dn2 {
        (un2 / qn2, 0.0, Branch::Adaptive)
    } else {
        let c: f64 = h
            .iter()
            .zip(z_next.iter().zip(z_curr))
            .map(|(hi, (zn, zc))| hi * (zn - zc))
            .sum();
        (
            (un2 * dn2 - qd * c) / gram,
            (un2 * qd - qn2 * c) / gram,
            Branch::Momentum,
        )
    };

    let x_next: Vec<f64> = x
        .iter()
        .zip(&q)
        .zip(&d)
        .map(|((xi, qi), di)| xi - alpha * qi + beta * di)
        .collect();
    let mut h_next: Vec<f64> = if beta == 0.0 {
        vec![0.0; m]
    } else {
        h.iter().map(|hi| beta * hi).collect()
    };
    scatter_su(&mut h_next, -alpha, &u, draw);
    Ok(MomentumXStep {
        x: finite_or(x_next, "momentum x step")?,
        h: finite_or(h_next, "momentum x step")?,
        alpha,
        beta,
        branch,
    })
}

/// `h¹ = -α₀ S₀ u⁰` for the first (non-momentum) step, so `x¹ - x⁰ = Aᵀh¹`.
pub fn initial_h(m: usize, step: &XStep, draw: &BlockDraw<'_>) -> Vec<f64> {
    let mut h = vec![0.0; m];
    if step.branch != Branch::Frozen {
        scatter_su(&mut h, -step.alpha, &step.u, draw);
    }
    h
}

/// One constant-step REABK update. Returns `(z_next, x_next)`.
pub fn reabk_const_step(
    a: &Matrix,
    z: &[f64],
    x: &[f64],
    b: &[f64],
    col_draw: &BlockDraw<'_>,
    row_draw: &BlockDraw<'_>,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut z_next = z.to_vec();
    if col_draw.fro_norm_sq > 0.0 && alpha != 0.0 {
        let t = a.col_block_transpose_apply(col_draw.indices, z)?;
        let p = a.col_block_apply(col_draw.indices, &t)?;
        let c = alpha / col_draw.fro_norm_sq;
        for (zi, pi) in z_next.iter_mut().zip(&p) {
            *zi -= c * pi;
        }
    }
    let mut x_next = x.to_vec();
    if row_draw.fro_norm_sq > 0.0 && alpha != 0.0 {
        let mut r = a.row_block_apply(row_draw.indices, x)?;
        for (ri, &i) in r.iter_mut().zip(row_draw.indices) {
            *ri += z_next[i] - b[i];
        }
        let g = a.row_block_transpose_apply(row_draw.indices, &r)?;
        let c = alpha / row_draw.fro_norm_sq;
        for (xi, gi) in x_next.iter_mut().zip(&g) {
            *xi -= c * gi;
        }
    }
    Ok((finite_or(z_next, "REABK step")?, finite_or(x_next, "REABK step")?))
}
