//! Bregman proximal variant: `x_+ = (grad phi)^{-1}(grad phi(x) - d(x))` with `Q = W_phi`.

use std::time::Instant;

use nalgebra::DVector;

use crate::config::{SolverConfig, TauRule};
use crate::error::{check_finite, ApError, Result};
use crate::sets::maps::DiagonalMap;
use crate::sets::{CatalogSet, SetKind};
use crate::solver::{dissolving_direction_with_map, terminal, wall_ms, StepReport};
use crate::system::{ConstraintSystem, Point};
use crate::trace::{IterRecord, IterateTrace, SolveOutput, Status, StepType};

/// Values produced by the inverse gradient map are clamped to at least this.
pub const UNDERFLOW_CLAMP: f64 = 1e-300;
/// Residual growth factor that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Separable Legendre kernel whose inverse Hessian extends to a projective map of its domain.
pub trait BregmanKernel: Send + Sync {
    fn dim(&self) -> usize;
    fn phi(&self, x: &Point) -> f64;
    fn grad_phi(&self, x: &Point) -> DVector<f64>;
    /// Returns the point and whether any coordinate had to be clamped.
    fn inv_grad_phi(&self, g: &DVector<f64>) -> (Point, bool);
    /// Extended inverse Hessian, diagonal for separable kernels.
    fn w_phi(&self, x: &Point) -> DiagonalMap;
    fn is_interior(&self, x: &Point) -> bool;
    /// The closure of the kernel's domain.
    fn domain_set(&self) -> CatalogSet;
}

/// `phi(x) = sum x_i log x_i - x_i` on the nonnegative orthant.
#[derive(Debug, Clone, Copy)]
pub struct EntropyKernel {
    pub n: usize,
}

impl BregmanKernel for EntropyKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn phi(&self, x: &Point) -> f64 {
        x.iter().map(|&v| if v > 0.0 { v * v.ln() - v } else { 0.0 }).sum()
    }
    fn grad_phi(&self, x: &Point) -> DVector<f64> {
        x.map(f64::ln)
    }
    fn inv_grad_phi(&self, g: &DVector<f64>) -> (Point, bool) {
        let mut clamped = false;
        let x = g.map(|v| {
            let e = v.exp();
            if e < UNDERFLOW_CLAMP {
                clamped = true;
                UNDERFLOW_CLAMP
            } else {
                e
            }
        });
        (x, clamped)
    }
    fn w_phi(&self, x: &Point) -> DiagonalMap {
        DiagonalMap { diag: x.map(|v| v.max(0.0)) }
    }
    fn is_interior(&self, x: &Point) -> bool {
        x.len() == self.n && x.iter().all(|&v| v > 0.0 && v.is_finite())
    }
    fn domain_set(&self) -> CatalogSet {
        CatalogSet::new(SetKind::Orthant { n: self.n }).expect("valid orthant")
    }
}

/// `phi(x) = sum x_i log x_i + (1 - x_i) log(1 - x_i)` on the unit box.
#[derive(Debug, Clone, Copy)]
pub struct FermiDiracKernel {
    pub n: usize,
}

impl BregmanKernel for FermiDiracKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn phi(&self, x: &Point) -> f64 {
        let h = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
        x.iter().map(|&v| h(v) + h(1.0 - v)).sum()
    }
    fn grad_phi(&self, x: &Point) -> DVector<f64> {
        x.map(|v| (v / (1.0 - v)).ln())
    }
    fn inv_grad_phi(&self, g: &DVector<f64>) -> (Point, bool) {
        let mut clamped = false;
        let x = g.map(|v| {
            // 1 / (1 + e^{-v}) written to avoid overflow on either side
            let s = if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            };
            if s < UNDERFLOW_CLAMP {
                clamped = true;
                UNDERFLOW_CLAMP
            } else if s >= 1.0 {
                clamped = true;
                1.0 - f64::EPSILON / 2.0
            } else {
                s
            }
        });
        (x, clamped)
    }
    fn w_phi(&self, x: &Point) -> DiagonalMap {
        DiagonalMap { diag: x.map(|v| (v * (1.0 - v)).max(0.0)) }
    }
    fn is_interior(&self, x: &Point) -> bool {
        x.len() == self.n && x.iter().all(|&v| v > 0.0 && v < 1.0)
    }
    fn domain_set(&self) -> CatalogSet {
        CatalogSet::new(SetKind::Box { lower: vec![0.0; self.n], upper: vec![1.0; self.n] }).expect("valid box")
    }
}

#[derive(Debug, Clone)]
pub struct BregmanStep {
    pub point: Point,
    pub clamped: bool,
    pub report: StepReport,
}

pub fn bregman_step(
    cs: &dyn ConstraintSystem,
    kernel: &dyn BregmanKernel,
    x: &Point,
    tau_rule: TauRule,
) -> Result<BregmanStep> {
    if x.len() != kernel.dim() || cs.dim() != kernel.dim() {
        return Err(ApError::Dimension(format!(
            "kernel dim {}, system dim {}, point dim {}",
            kernel.dim(),
            cs.dim(),
            x.len()
        )));
    }
    if !kernel.is_interior(x) {
        return Err(ApError::DomainViolation { iteration: 0 });
    }
    let w = kernel.w_phi(x);
    let report = dissolving_direction_with_map(cs, &w, x, tau_rule)?;
    let g = kernel.grad_phi(x) - &report.direction;
    check_finite(g.as_slice(), "mirror point")?;
    let (point, clamped) = kernel.inv_grad_phi(&g);
    Ok(BregmanStep { point, clamped, report })
}

pub fn solve_bregman(
    cs: &dyn ConstraintSystem,
    kernel: &dyn BregmanKernel,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    cfg.validate()?;
    if !kernel.is_interior(x0) {
        return Err(ApError::DomainViolation { iteration: 0 });
    }
    let mut x = x0.clone();
    let mut trace = IterateTrace::default();
    let r0 = cs.eval(&x).norm();
    for k in 0..cfg.max_iters {
        let t0 = Instant::now();
        let r = cs.eval(&x).norm();
        if !r.is_finite() || r > DIVERGENCE_FACTOR * r0.max(f64::MIN_POSITIVE) {
            return Err(ApError::Diverged { iteration: k, residual: r });
        }
        if r <= cfg.tol {
            trace.push(terminal(k, r));
            return Ok(SolveOutput { x, status: Status::Converged, trace });
        }
        let step = bregman_step(cs, kernel, &x, cfg.tau_rule).map_err(|e| match e {
            ApError::DomainViolation { .. } => ApError::DomainViolation { iteration: k },
            other => other,
        })?;
        if !kernel.is_interior(&step.point) {
            return Err(ApError::DomainViolation { iteration: k + 1 });
        }
        let step_norm = (&step.point - &x).norm();
        trace.push(IterRecord {
            k,
            residual: r,
            step_type: StepType::Bregman,
            ls_depth: None,
            eta: None,
            sigma_min_g: Some(step.report.sigma_min_g),
            wall_ms: wall_ms(t0),
            step_norm,
            stalled: false,
            clamped: step.clamped,
        });
        x = step.point;
    }
    let r = cs.eval(&x).norm();
    trace.push(terminal(cfg.max_iters, r));
    let status = if r <= cfg.tol { Status::Converged } else { Status::MaxIters };
    Ok(SolveOutput { x, status, trace })
}
