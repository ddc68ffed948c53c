use nalgebra::DVector;

use crate::config::{SolverConfig, TauRule};
use crate::error::{check_finite, ApError, Result};
use crate::linalg::{min_eigenvalue, min_eigenvalue_inverse_iteration, Cholesky};
use crate::sets::{ProjectiveMap, ProjectiveSet};
use crate::system::{assemble_gram_with_map, check_point, ConstraintSystem, Point};

/// Above this many constraints the smallest Gram eigenvalue is estimated by inverse iteration.
const EXACT_SIGMA_MAX_P: usize = 300;
/// `ap_step` returns its input unchanged below this residual.
pub const FEASIBLE_GUARD: f64 = 1e-14;

/// Everything computed for one dissolving step at `x`.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// `(G + tau I)^{-1} c`.
    pub multipliers: DVector<f64>,
    /// `d(x) = J y`.
    pub direction: DVector<f64>,
    /// `Q(x) d(x)`.
    pub q_step: DVector<f64>,
    /// `A(x) = x - Q(x) d(x)`.
    pub trial: Point,
    /// `||c(x)||`.
    pub residual_before: f64,
    /// `||c(A(x))||`, evaluated at the trial point (before any projection).
    pub residual_after: f64,
    pub tau: f64,
    pub sigma_min_g: f64,
    /// Diagonal shift added after a failed factorization (zero if none).
    pub ridge: f64,
}

pub fn dissolving_direction(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    x: &Point,
    tau_rule: TauRule,
) -> Result<StepReport> {
    check_point(cs, set, x)?;
    let map = set.projective_map(x)?;
    dissolving_direction_with_map(cs, map.as_ref(), x, tau_rule)
}

/// Dissolving step for an explicitly supplied operator `Q`.
pub fn dissolving_direction_with_map(
    cs: &dyn ConstraintSystem,
    map: &dyn ProjectiveMap,
    x: &Point,
    tau_rule: TauRule,
) -> Result<StepReport> {
    let gs = assemble_gram_with_map(cs, map, x)?;
    let c = &gs.residual;
    let r = c.norm();
    let tau = tau_rule.eval(r);
    let p = c.len();
    if p == 0 {
        let n = x.len();
        return Ok(StepReport {
            multipliers: DVector::zeros(0),
            direction: DVector::zeros(n),
            q_step: DVector::zeros(n),
            trial: x.clone(),
            residual_before: 0.0,
            residual_after: 0.0,
            tau,
            sigma_min_g: 0.0,
            ridge: 0.0,
        });
    }
    let mut a = gs.gram.clone();
    for i in 0..p {
        a[(i, i)] += tau;
    }
    let mut ridge = 0.0;
    let chol = match Cholesky::factor(&a) {
        Some(ch) => ch,
        None => {
            let tr = gs.gram.trace();
            ridge = if tr > 0.0 { 1e-14 * tr / p as f64 } else { 1e-14 };
            for i in 0..p {
                a[(i, i)] += ridge;
            }
            Cholesky::factor(&a).ok_or_else(|| {
                ApError::LinearSolveFailure(format!("G + tau I not positive definite (p = {p}, tau = {tau:.3e})"))
            })?
        }
    };
    let y = chol.solve(c);
    check_finite(y.as_slice(), "multipliers")?;
    let sigma_min_g = if p <= EXACT_SIGMA_MAX_P {
        min_eigenvalue(&gs.gram).max(0.0)
    } else {
        min_eigenvalue_inverse_iteration(&chol, tau + ridge, 30)
    };
    let direction = cs.jacobian_mul(x, &y);
    let q_step = match &gs.qj {
        Some(qj) => qj * &y,
        None => map.apply(&direction),
    };
    check_finite(q_step.as_slice(), "dissolving step")?;
    let trial = x - &q_step;
    let residual_after = cs.eval(&trial).norm();
    Ok(StepReport {
        multipliers: y,
        direction,
        q_step,
        trial,
        residual_before: r,
        residual_after,
        tau,
        sigma_min_g,
        ridge,
    })
}

/// Result of `x_+ = Pi_X(A(x))`.
#[derive(Debug, Clone)]
pub struct ApStep {
    pub point: Point,
    /// `None` when the guard for already-feasible points fired.
    pub report: Option<StepReport>,
    pub projection_error: f64,
}

pub fn ap_step(cs: &dyn ConstraintSystem, set: &dyn ProjectiveSet, x: &Point, cfg: &SolverConfig) -> Result<ApStep> {
    check_point(cs, set, x)?;
    let map = set.projective_map(x)?;
    let r = cs.eval(x).norm();
    if r <= FEASIBLE_GUARD {
        return Ok(ApStep { point: x.clone(), report: None, projection_error: 0.0 });
    }
    let report = dissolving_direction_with_map(cs, map.as_ref(), x, cfg.tau_rule)?;
    let proj = set.project(&report.trial, cfg.projection_tol(r))?;
    Ok(ApStep { point: proj.point, report: Some(report), projection_error: proj.error })
}
