use std::time::Instant;

use crate::config::SolverConfig;
use crate::error::{ApError, Result};
use crate::sets::{ProjectiveSet, MEMBERSHIP_TOL};
use crate::system::{check_point, ConstraintSystem, Point};
use crate::trace::{IterRecord, IterateTrace, SolveOutput, Status, StepType};

use super::{ap_step, pg_step};

pub(crate) fn ensure_start(cs: &dyn ConstraintSystem, set: &dyn ProjectiveSet, x0: &Point) -> Result<()> {
    check_point(cs, set, x0)?;
    let v = set.violation(x0);
    if v > MEMBERSHIP_TOL * x0.amax().max(1.0) {
        return Err(ApError::OutsideSet { violation: v });
    }
    Ok(())
}

pub(crate) fn terminal(k: usize, residual: f64) -> IterRecord {
    IterRecord {
        k,
        residual,
        step_type: StepType::Terminal,
        ls_depth: None,
        eta: None,
        sigma_min_g: None,
        wall_ms: 0.0,
        step_norm: 0.0,
        stalled: false,
        clamped: false,
    }
}

pub(crate) fn wall_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Dissolving steps accepted when they cut the residual by the factor `1 - kappa`,
/// projected-gradient steps otherwise.
pub fn solve_aphl(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    cfg.validate()?;
    ensure_start(cs, set, x0)?;
    let mut x = x0.clone();
    let mut trace = IterateTrace::default();
    for k in 0..cfg.max_iters {
        let t0 = Instant::now();
        let r = cs.eval(&x).norm();
        if r <= cfg.tol {
            trace.push(terminal(k, r));
            return Ok(SolveOutput { x, status: Status::Converged, trace });
        }
        let ap = ap_step(cs, set, &x, cfg)?;
        let sigma = ap.report.as_ref().map(|rep| rep.sigma_min_g);
        let r_trial = cs.eval(&ap.point).norm();
        let record = if r_trial < (1.0 - cfg.kappa) * r {
            let step_norm = (&ap.point - &x).norm();
            x = ap.point;
            IterRecord {
                k,
                residual: r,
                step_type: StepType::Dissolving,
                ls_depth: None,
                eta: None,
                sigma_min_g: sigma,
                wall_ms: wall_ms(t0),
                step_norm,
                stalled: false,
                clamped: false,
            }
        } else {
            let pg = pg_step(cs, set, &x, cfg)?;
            x = pg.point;
            IterRecord {
                k,
                residual: r,
                step_type: StepType::ProjectedGradient,
                ls_depth: Some(pg.depth),
                eta: Some(pg.eta),
                sigma_min_g: sigma,
                wall_ms: wall_ms(t0),
                step_norm: pg.step_norm,
                stalled: pg.stalled,
                clamped: false,
            }
        };
        trace.push(record);
    }
    let r = cs.eval(&x).norm();
    let k = cfg.max_iters;
    trace.push(terminal(k, r));
    let status = if r <= cfg.tol { Status::Converged } else { Status::MaxIters };
    Ok(SolveOutput { x, status, trace })
}

/// Unglobalized iteration `x_+ = Pi_X(A(x))`.
pub fn solve_plain_ap(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    cfg.validate()?;
    ensure_start(cs, set, x0)?;
    let mut x = x0.clone();
    let mut trace = IterateTrace::default();
    for k in 0..cfg.max_iters {
        let t0 = Instant::now();
        let r = cs.eval(&x).norm();
        if r <= cfg.tol {
            trace.push(terminal(k, r));
            return Ok(SolveOutput { x, status: Status::Converged, trace });
        }
        let ap = ap_step(cs, set, &x, cfg)?;
        let step_norm = (&ap.point - &x).norm();
        let sigma = ap.report.as_ref().map(|rep| rep.sigma_min_g);
        x = ap.point;
        trace.push(IterRecord {
            k,
            residual: r,
            step_type: StepType::Dissolving,
            ls_depth: None,
            eta: None,
            sigma_min_g: sigma,
            wall_ms: wall_ms(t0),
            step_norm,
            stalled: false,
            clamped: false,
        });
    }
    let r = cs.eval(&x).norm();
    trace.push(terminal(cfg.max_iters, r));
    let status = if r <= cfg.tol { Status::Converged } else { Status::MaxIters };
    Ok(SolveOutput { x, status, trace })
}
