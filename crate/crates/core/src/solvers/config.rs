use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Randomized extended Kaczmarz (singleton blocks, unit step).
    Rek,
    /// Randomized extended average block Kaczmarz with a constant step.
    #[serde(rename = "reabk")]
    ReabkConst,
    /// Extended block method with adaptive step sizes.
    Areabk,
    /// Extended block method with adaptive heavy-ball momentum.
    Amreabk,
    /// Stochastic variance reduced gradient on `(1/2m)‖Ax - b‖²`.
    Svrg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rek => "rek",
            Method::ReabkConst => "reabk",
            Method::Areabk => "areabk",
            Method::Amreabk => "amreabk",
            Method::Svrg => "svrg",
        }
    }

    /// Whether the method samples row/column blocks (everything except SVRG).
    pub fn uses_blocks(self) -> bool {
        !matches!(self, Method::Svrg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rek" => Ok(Method::Rek),
            "reabk" | "reabk_const" => Ok(Method::ReabkConst),
            "areabk" => Ok(Method::Areabk),
            "amreabk" => Ok(Method::Amreabk),
            "svrg" => Ok(Method::Svrg),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Relaxation of the `z` step size, in `(0, 2)`.
    pub eta: f64,
    /// Relaxation of the `x` step size, in `(0, 2)`.
    pub zeta: f64,
    /// Constant step of REABK.
    pub alpha_const: f64,
    pub svrg_alpha: f64,
    pub svrg_inner_n: usize,
    pub max_iters: usize,
    pub rse_tol: f64,
    /// Absolute tolerance on `‖Aᵀ(Ax - b)‖₂`; 0 disables it.
    pub residual_tol: f64,
    pub seed: u64,
    /// Record wall-clock time per iteration (breaks byte-identical output).
    pub record_timing: bool,
    /// SVRG only: track `‖g - ∇f(x)‖` over every inner step (costs a full gradient per step).
    pub track_variance: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            eta: 1.0,
            zeta: 1.0,
            alpha_const: 1.0,
            svrg_alpha: 0.0,
            svrg_inner_n: 0,
            max_iters: 100_000,
            rse_tol: 1e-12,
            residual_tol: 0.0,
            seed: 0,
            record_timing: false,
            track_variance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 2.0;
        if !open(self.eta) {
            return Err(Error::Config(format!("eta = {} must lie in (0, 2)", self.eta)));
        }
        if !open(self.zeta) {
            return Err(Error::Config(format!("zeta = {} must lie in (0, 2)", self.zeta)));
        }
        if !(self.rse_tol >= 0.0 && self.residual_tol >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        match self.method {
            Method::ReabkConst if !(self.alpha_const > 0.0 && self.alpha_const.is_finite()) => {
                Err(Error::Config(format!("REABK step {} must be positive", self.alpha_const)))
            }
            Method::Svrg if !(self.svrg_alpha > 0.0 && self.svrg_alpha.is_finite()) => {
                Err(Error::Config("SVRG step size must be positive".into()))
            }
            Method::Svrg if self.svrg_inner_n == 0 => {
                Err(Error::Config("SVRG inner loop length must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Which update a step actually performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Two-parameter optimal heavy-ball step.
    Momentum = 0,
    /// Single-direction step: the adaptive step of the basic method, the
    /// fallback of the momentum method, or a constant step.
    Adaptive = 1,
    /// Sampled sub-residual was zero; the iterate is unchanged.
    Frozen = 2,
}

impl Branch {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub z_branch: Branch,
    pub x_branch: Branch,
}

impl StepDiagnostics {
    pub(crate) fn idle() -> Self {
        Self {
            mu: 0.0,
            omega: 0.0,
            alpha: 0.0,
            beta: 0.0,
            z_branch: Branch::Frozen,
            x_branch: Branch::Frozen,
        }
    }
}
