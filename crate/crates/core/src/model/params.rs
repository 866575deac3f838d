use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};

/// How a factor block is updated inside the line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact minimization of the regularized block subproblem.
    Proximal,
    /// One proximal step on the linearized coupling term.
    ProxLinear,
    /// Column-by-column Gauss-Seidel sweep; needs a column-separable regularizer.
    HierarchicalProx,
}

impl Scheme {
    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::Proximal => "prox",
            Scheme::ProxLinear => "proxlin",
            Scheme::HierarchicalProx => "hier",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Scheme {
    type Err = NaumError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prox" | "proximal" => Ok(Scheme::Proximal),
            "proxlin" | "prox-linear" => Ok(Scheme::ProxLinear),
            "hier" | "hierarchical-prox" => Ok(Scheme::HierarchicalProx),
            other => Err(NaumError::param(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Constants of the NAUM iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub tau: f64,
    pub c: f64,
    /// Non-monotone window length: the line search compares against the
    /// largest of the last `window + 1` objective values.
    pub window: usize,
    pub mu_min: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub scheme_x: Scheme,
    pub scheme_y: Scheme,
}

/// Optional replacements for the defaults chosen by [`derive_params`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    pub tau: Option<f64>,
    pub c: Option<f64>,
    pub window: Option<usize>,
    pub mu_min: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    pub gamma: Option<f64>,
    pub scheme_x: Option<Scheme>,
    pub scheme_y: Option<Scheme>,
}

/// Builds a parameter set from `alpha`: `beta = alpha / (alpha - 1)`,
/// `gamma = max{0, -alpha, -(alpha + beta)}`,
/// `rho = max{1, alpha^2 / (alpha + beta)^2}`, and the experimental defaults
/// `mu_min = sigma_min = 1`, `sigma_max = 1e6`, `tau = 4`, `c = 1e-4`, window 3.
pub fn derive_params(alpha: f64, overrides: &ParamOverrides) -> Result<SolverParams> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(NaumError::param(format!(
            "alpha must be finite and differ from 0 and 1, got {alpha}"
        )));
    }
    let beta = alpha / (alpha - 1.0);
    let sum = alpha + beta;
    let params = SolverParams {
        alpha,
        beta,
        gamma: overrides
            .gamma
            .unwrap_or_else(|| 0.0f64.max(-alpha).max(-sum)),
        rho: 1.0f64.max(alpha * alpha / (sum * sum)),
        tau: overrides.tau.unwrap_or(4.0),
        c: overrides.c.unwrap_or(1e-4),
        window: overrides.window.unwrap_or(3),
        mu_min: overrides.mu_min.unwrap_or(1.0),
        sigma_min: overrides.sigma_min.unwrap_or(1.0),
        sigma_max: overrides.sigma_max.unwrap_or(1e6),
        scheme_x: overrides.scheme_x.unwrap_or(Scheme::HierarchicalProx),
        scheme_y: overrides.scheme_y.unwrap_or(Scheme::HierarchicalProx),
    };
    params.validate()?;
    Ok(params)
}

impl SolverParams {
    /// `alpha + 2 gamma rho`, the curvature factor in `mu_max` and `sigma_max`.
    pub fn curvature(&self) -> f64 {
        self.alpha + 2.0 * self.gamma * self.rho
    }

    /// Weight `beta / (alpha + beta)` that the Z-update places on the data.
    pub fn data_weight(&self) -> f64 {
        self.beta / (self.alpha + self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(NaumError::InvalidParameter(msg));
        let finite = [
            self.alpha,
            self.beta,
            self.gamma,
            self.rho,
            self.tau,
            self.c,
            self.mu_min,
            self.sigma_min,
            self.sigma_max,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite".into());
        }
        if (1.0 / self.alpha + 1.0 / self.beta - 1.0).abs() > 1e-12 {
            return fail(format!(
                "1/alpha + 1/beta must equal 1 (alpha={}, beta={})",
                self.alpha, self.beta
            ));
        }
        let gamma_floor = 0.0f64.max(-self.alpha).max(-(self.alpha + self.beta));
        if self.gamma < gamma_floor {
            return fail(format!("gamma must be >= {gamma_floor}, got {}", self.gamma));
        }
        let sum = self.alpha + self.beta;
        let rho = 1.0f64.max(self.alpha * self.alpha / (sum * sum));
        if self.rho != rho {
            return fail(format!("rho must be {rho}, got {}", self.rho));
        }
        if !(self.tau > 1.0) {
            return fail(format!("tau must exceed 1, got {}", self.tau));
        }
        if !(self.c > 0.0) || !(self.mu_min > 0.0) || !(self.sigma_min > 0.0) {
            return fail("c, mu_min and sigma_min must be positive".into());
        }
        if !(self.sigma_min < self.sigma_max) {
            return fail(format!(
                "sigma_min ({}) must be below sigma_max ({})",
                self.sigma_min, self.sigma_max
            ));
        }
        Ok(())
    }
}
