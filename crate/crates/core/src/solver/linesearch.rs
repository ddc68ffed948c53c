use crate::config::SolverConfig;
use crate::error::{check_finite, Result};
use crate::sets::ProjectiveSet;
use crate::system::{check_point, ConstraintSystem, Point};

/// Outcome of one projected-gradient step on `f = ||c||^2 / 2`.
#[derive(Debug, Clone)]
pub struct PgStep {
    pub point: Point,
    /// Backtracking index `j` of the accepted step size `eta_max alpha^j`.
    pub depth: usize,
    pub eta: f64,
    /// No step size satisfied the sufficient-decrease test; `point` is the deepest trial.
    pub stalled: bool,
    /// `||c(point)||`.
    pub residual: f64,
    pub step_norm: f64,
}

/// Projected gradient with backtracking: the smallest `j` with
/// `f(x_+) <= f(x) - ||x_+ - x||^2 / (4 eta_j)`, `x_+ = Pi_X(x - eta_j J c)`, `eta_j = eta_max alpha^j`.
pub fn pg_step(cs: &dyn ConstraintSystem, set: &dyn ProjectiveSet, x: &Point, cfg: &SolverConfig) -> Result<PgStep> {
    check_point(cs, set, x)?;
    let c = cs.eval(x);
    check_finite(c.as_slice(), "constraint values")?;
    let r = c.norm();
    let f0 = 0.5 * r * r;
    let grad = cs.jacobian_mul(x, &c);
    check_finite(grad.as_slice(), "gradient")?;
    let tol = cfg.projection_tol(r);

    let mut last = None;
    for j in 0..=cfg.max_linesearch {
        let eta = cfg.eta_max * cfg.alpha.powi(j as i32);
        let z = x - &grad * eta;
        let xp = set.project(&z, tol)?.point;
        let rp = cs.eval(&xp).norm();
        let s = (&xp - x).norm();
        let f1 = 0.5 * rp * rp;
        if f1 <= f0 - s * s / (4.0 * eta) {
            return Ok(PgStep { point: xp, depth: j, eta, stalled: false, residual: rp, step_norm: s });
        }
        last = Some(PgStep { point: xp, depth: j, eta, stalled: true, residual: rp, step_norm: s });
    }
    // Cap reached: keep the deepest trial and let the caller flag it.
    Ok(last.expect("max_linesearch loop runs at least once"))
}
