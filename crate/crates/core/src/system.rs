//! Constraint systems and the Gram matrix `G = J^T Q J`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, ApError, Result};
use crate::sets::{ProjectiveMap, ProjectiveSet};

pub type Point = DVector<f64>;

/// Sparse vector in coordinate form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn new(idx: Vec<usize>, val: Vec<f64>) -> Self {
        assert_eq!(idx.len(), val.len());
        Self { idx, val }
    }

    pub fn to_dense(&self, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        self.add_scaled_to(1.0, &mut out);
        out
    }

    pub fn dot_dense(&self, v: &DVector<f64>) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, &a)| a * v[i]).sum()
    }

    pub fn add_scaled_to(&self, alpha: f64, out: &mut DVector<f64>) {
        for (&i, &a) in self.idx.iter().zip(&self.val) {
            out[i] += alpha * a;
        }
    }
}

/// Smooth map `c: R^n -> R^p` whose zero set is intersected with a projective set.
pub trait ConstraintSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn eval(&self, x: &Point) -> DVector<f64>;
    /// `n x p`, column `i` is the gradient of `c_i`.
    fn jacobian(&self, x: &Point) -> DMatrix<f64>;

    /// Column-wise sparse gradients, for systems whose gradients have few nonzeros.
    fn sparse_gradients(&self, _x: &Point) -> Option<Vec<SparseVec>> {
        None
    }

    /// `J(x) y`.
    fn jacobian_mul(&self, x: &Point, y: &DVector<f64>) -> DVector<f64> {
        match self.sparse_gradients(x) {
            Some(g) => {
                let mut out = DVector::zeros(self.dim());
                for (gi, &yi) in g.iter().zip(y.iter()) {
                    gi.add_scaled_to(yi, &mut out);
                }
                out
            }
            None => self.jacobian(x) * y,
        }
    }
}

/// Exact projector onto the zero set of an affine constraint system.
pub trait AffineProjector: Send + Sync {
    fn project(&self, z: &Point) -> Point;
}

pub(crate) fn check_point(cs: &dyn ConstraintSystem, set: &dyn ProjectiveSet, x: &Point) -> Result<()> {
    if cs.dim() != set.dim() || x.len() != cs.dim() {
        return Err(ApError::Dimension(format!(
            "system dim {}, set dim {}, point dim {}",
            cs.dim(),
            set.dim(),
            x.len()
        )));
    }
    check_finite(x.as_slice(), "point")
}

/// Gram system at a point.
#[derive(Debug, Clone)]
pub struct GramSystem {
    /// `J^T Q J`, symmetrized.
    pub gram: DMatrix<f64>,
    pub residual: DVector<f64>,
    /// `Q J` when assembled densely.
    pub qj: Option<DMatrix<f64>>,
    pub sparse: bool,
}

/// Assembles `G = J^T Q(x) J` and `c(x)`; requires `x` in the set.
pub fn assemble_gram(cs: &dyn ConstraintSystem, set: &dyn ProjectiveSet, x: &Point) -> Result<GramSystem> {
    check_point(cs, set, x)?;
    let map = set.projective_map(x)?;
    assemble_gram_with_map(cs, map.as_ref(), x)
}

/// Uses the sparse path when the system provides sparse gradients and the map supports it.
pub fn assemble_gram_with_map(cs: &dyn ConstraintSystem, map: &dyn ProjectiveMap, x: &Point) -> Result<GramSystem> {
    if let Some(g) = assemble_gram_sparse(cs, map, x)? {
        return Ok(g);
    }
    assemble_gram_dense(cs, map, x)
}

pub fn assemble_gram_dense(cs: &dyn ConstraintSystem, map: &dyn ProjectiveMap, x: &Point) -> Result<GramSystem> {
    let residual = cs.eval(x);
    check_finite(residual.as_slice(), "constraint values")?;
    let j = cs.jacobian(x);
    let p = cs.num_constraints();
    if j.shape() != (cs.dim(), p) {
        return Err(ApError::Dimension(format!("jacobian shape {:?}", j.shape())));
    }
    let mut qj = DMatrix::zeros(cs.dim(), p);
    for i in 0..p {
        let col = map.apply(&j.column(i).into_owned());
        qj.set_column(i, &col);
    }
    let g = j.transpose() * &qj;
    let gram = (&g + g.transpose()) * 0.5;
    check_finite(gram.as_slice(), "gram matrix")?;
    Ok(GramSystem { gram, residual, qj: Some(qj), sparse: false })
}

pub fn assemble_gram_sparse(
    cs: &dyn ConstraintSystem,
    map: &dyn ProjectiveMap,
    x: &Point,
) -> Result<Option<GramSystem>> {
    let grads = match cs.sparse_gradients(x) {
        Some(g) => g,
        None => return Ok(None),
    };
    let p = grads.len();
    if p > 0 && map.bilinear_sparse(&grads[0], &grads[0]).is_none() {
        return Ok(None);
    }
    let residual = cs.eval(x);
    check_finite(residual.as_slice(), "constraint values")?;
    let mut gram = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = map.bilinear_sparse(&grads[i], &grads[j]).unwrap_or(0.0);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    check_finite(gram.as_slice(), "gram matrix")?;
    Ok(Some(GramSystem { gram, residual, qj: None, sparse: true }))
}
