use std::time::Instant;

use crate::config::SolverConfig;
use crate::error::{ApError, Result};
use crate::sets::ProjectiveSet;
use crate::system::{check_point, AffineProjector, ConstraintSystem, Point};
use crate::trace::{IterRecord, IterateTrace, SolveOutput, Status, StepType};

use super::aphl::{terminal, wall_ms};

/// Classical alternating projections `x_{k+1} = Pi_M(Pi_X(x_k))`.
///
/// The residual of iterate `k` is measured at `Pi_X(x_k)`, which is also the returned point.
pub fn solve_apm(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    affine: Option<&dyn AffineProjector>,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    cfg.validate()?;
    let pm = affine.ok_or_else(|| ApError::Unsupported("no exact projector onto the constraint manifold".into()))?;
    check_point(cs, set, x0)?;
    let mut x = x0.clone();
    let mut trace = IterateTrace::default();
    for k in 0..cfg.max_iters {
        let t0 = Instant::now();
        let y = set.project(&x, cfg.proj_base_tol)?.point;
        let r = cs.eval(&y).norm();
        if r <= cfg.tol {
            trace.push(terminal(k, r));
            return Ok(SolveOutput { x: y, status: Status::Converged, trace });
        }
        let next = pm.project(&y);
        let step_norm = (&next - &y).norm();
        x = next;
        trace.push(IterRecord {
            k,
            residual: r,
            step_type: StepType::Alternating,
            ls_depth: None,
            eta: None,
            sigma_min_g: None,
            wall_ms: wall_ms(t0),
            step_norm,
            stalled: false,
            clamped: false,
        });
    }
    let y = set.project(&x, cfg.proj_base_tol)?.point;
    let r = cs.eval(&y).norm();
    trace.push(terminal(cfg.max_iters, r));
    let status = if r <= cfg.tol { Status::Converged } else { Status::MaxIters };
    Ok(SolveOutput { x: y, status, trace })
}
