use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::{min_eigenvalue, sym_norm2};
use crate::sets::ProjectiveSet;
use crate::system::{assemble_gram, AffineProjector, ConstraintSystem, Point};

/// Relative threshold under which the Gram matrix is reported as nearly singular.
pub const DEGENERACY_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    /// `sigma_min(J^T Q J)`.
    pub sigma_xq: f64,
    /// `sigma_min(J)`.
    pub sigma_xc: f64,
    pub gram_norm: f64,
    pub warning: bool,
}

pub fn nondegeneracy_report(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    x: &Point,
) -> Result<NondegeneracyReport> {
    let gs = assemble_gram(cs, set, x)?;
    let sigma_xq = min_eigenvalue(&gs.gram).max(0.0);
    let gram_norm = sym_norm2(&gs.gram);
    let sigma_xc = jacobian_sigma_min(cs, x);
    let warning = sigma_xq <= DEGENERACY_REL * gram_norm;
    Ok(NondegeneracyReport { sigma_xq, sigma_xc, gram_norm, warning })
}

fn jacobian_gram(cs: &dyn ConstraintSystem, x: &Point) -> DMatrix<f64> {
    if let Some(grads) = cs.sparse_gradients(x) {
        let p = grads.len();
        let mut g = DMatrix::zeros(p, p);
        let mut scratch = DVector::zeros(cs.dim());
        for i in 0..p {
            grads[i].add_scaled_to(1.0, &mut scratch);
            for j in i..p {
                let v = grads[j].dot_dense(&scratch);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
            grads[i].add_scaled_to(-1.0, &mut scratch);
        }
        return g;
    }
    let j = cs.jacobian(x);
    j.transpose() * j
}

pub fn jacobian_sigma_min(cs: &dyn ConstraintSystem, x: &Point) -> f64 {
    min_eigenvalue(&jacobian_gram(cs, x)).max(0.0).sqrt()
}

pub fn jacobian_sigma_max(cs: &dyn ConstraintSystem, x: &Point) -> f64 {
    sym_norm2(&jacobian_gram(cs, x)).sqrt()
}

/// Two-sided comparison between `||c(y)||` and `dist(y, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBounds {
    pub residual: f64,
    pub dist: f64,
    /// `||c(y)|| / ||J(x*)||`.
    pub lower: f64,
    /// `2 ||c(y)|| / sigma_min(J(x*))`.
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Checks `||c(y)|| / M <= dist(y, M) <= 2 ||c(y)|| / sigma` at the nearest point `x* = Pi_M(y)`.
pub fn distance_bounds_check(cs: &dyn ConstraintSystem, manifold: &dyn AffineProjector, y: &Point) -> DistanceBounds {
    let xs = manifold.project(y);
    let dist = (y - &xs).norm();
    let residual = cs.eval(y).norm();
    let lower = residual / jacobian_sigma_max(cs, &xs);
    let upper = 2.0 * residual / jacobian_sigma_min(cs, &xs);
    let slack = 1e-12 * dist.max(1e-300);
    DistanceBounds { residual, dist, lower, upper, lower_ok: lower <= dist + slack, upper_ok: dist <= upper + slack }
}
