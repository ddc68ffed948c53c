use serde::{Deserialize, Serialize};

use crate::error::{ApError, Result};

/// Regularizer `tau` applied to the Gram system as a function of `||c(x)||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// `tau(t) = min(t, 1)`
    #[default]
    Min1,
    /// `tau(t) = t^2`
    Square,
}

impl TauRule {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TauRule::Min1 => t.min(1.0),
            TauRule::Square => t * t,
        }
    }
}

/// Parameters of the globalized solver and its variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Required fractional residual decrease for accepting a dissolving step.
    pub kappa: f64,
    pub eta_max: f64,
    /// Backtracking factor of the projected-gradient line search.
    pub alpha: f64,
    pub max_linesearch: usize,
    pub tau_rule: TauRule,
    pub tol: f64,
    pub max_iters: usize,
    /// Projection tolerance is `min(proj_base_tol, proj_tol_scale * ||c||^2)`.
    pub proj_tol_scale: f64,
    pub proj_base_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            eta_max: 1.0,
            alpha: 0.7,
            max_linesearch: 10,
            tau_rule: TauRule::Min1,
            tol: 1e-10,
            max_iters: 5000,
            proj_tol_scale: 1.0,
            proj_base_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ApError::Config(m.to_string()));
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad("kappa must lie in (0, 1)");
        }
        if !(self.eta_max > 0.0 && self.eta_max.is_finite()) {
            return bad("eta_max must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.proj_tol_scale > 0.0 && self.proj_base_tol > 0.0) {
            return bad("projection tolerances must be positive");
        }
        Ok(())
    }

    pub fn projection_tol(&self, residual: f64) -> f64 {
        self.proj_base_tol.min(self.proj_tol_scale * residual * residual)
    }
}
