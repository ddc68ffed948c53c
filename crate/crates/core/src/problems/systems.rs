//! Constraint systems used by the experiment families.

use nalgebra::{DMatrix, DVector};

use crate::error::{ApError, Result};
use crate::linalg::Cholesky;
use crate::system::{AffineProjector, ConstraintSystem, Point, SparseVec};

/// `c(x) = J^T x - b` with a fixed `n x p` matrix `J`.
pub struct AffineConstraints {
    jac: DMatrix<f64>,
    b: DVector<f64>,
    gram: Option<Cholesky>,
}

impl AffineConstraints {
    /// Fails with `DegenerateInstance` when the columns of `jac` are linearly dependent.
    pub fn new(jac: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if jac.ncols() != b.len() {
            return Err(ApError::Dimension(format!("{} columns, {} right-hand sides", jac.ncols(), b.len())));
        }
        let gram = if jac.ncols() == 0 {
            None
        } else {
            let g = jac.transpose() * &jac;
            let chol = Cholesky::factor(&g)
                .ok_or_else(|| ApError::DegenerateInstance("constraint gradients are linearly dependent".into()))?;
            // reject numerically dependent gradients as well
            let scale = g.diagonal().max();
            let lam = crate::linalg::min_eigenvalue(&g);
            if !(lam > 1e-12 * scale) {
                return Err(ApError::DegenerateInstance(format!(
                    "constraint Gram matrix is nearly singular (min eigenvalue {lam:.3e})"
                )));
            }
            Some(chol)
        };
        Ok(Self { jac, b, gram })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.jac
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }
}

impl ConstraintSystem for AffineConstraints {
    fn dim(&self) -> usize {
        self.jac.nrows()
    }
    fn num_constraints(&self) -> usize {
        self.jac.ncols()
    }
    fn eval(&self, x: &Point) -> DVector<f64> {
        self.jac.tr_mul(x) - &self.b
    }
    fn jacobian(&self, _x: &Point) -> DMatrix<f64> {
        self.jac.clone()
    }
    fn jacobian_mul(&self, _x: &Point, y: &DVector<f64>) -> DVector<f64> {
        &self.jac * y
    }
}

impl AffineProjector for AffineConstraints {
    fn project(&self, z: &Point) -> Point {
        match &self.gram {
            None => z.clone(),
            Some(chol) => {
                let w = chol.solve(&self.eval(z));
                z - &self.jac * w
            }
        }
    }
}

/// Symmetric `n x n` matrices (flattened) with unit diagonal and `(X_ij + X_ji) / 2 = 0` on `pairs`.
pub struct CorrelationConstraints {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl CorrelationConstraints {
    pub fn new(n: usize, pairs: Vec<(usize, usize)>) -> Self {
        Self { n, pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

impl ConstraintSystem for CorrelationConstraints {
    fn dim(&self) -> usize {
        self.n * self.n
    }
    fn num_constraints(&self) -> usize {
        self.n + self.pairs.len()
    }
    fn eval(&self, x: &Point) -> DVector<f64> {
        let n = self.n;
        let mut c = DVector::zeros(self.num_constraints());
        for i in 0..n {
            c[i] = x[i * n + i] - 1.0;
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            c[n + k] = 0.5 * (x[i * n + j] + x[j * n + i]);
        }
        c
    }
    fn jacobian(&self, x: &Point) -> DMatrix<f64> {
        let grads = self.sparse_gradients(x).expect("always sparse");
        let mut j = DMatrix::zeros(self.dim(), grads.len());
        for (k, g) in grads.iter().enumerate() {
            for (&i, &v) in g.idx.iter().zip(&g.val) {
                j[(i, k)] += v;
            }
        }
        j
    }
    fn sparse_gradients(&self, _x: &Point) -> Option<Vec<SparseVec>> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.num_constraints());
        for i in 0..n {
            out.push(SparseVec::new(vec![i * n + i], vec![1.0]));
        }
        for &(i, j) in &self.pairs {
            out.push(SparseVec::new(vec![i * n + j, j * n + i], vec![0.5, 0.5]));
        }
        Some(out)
    }
}

impl AffineProjector for CorrelationConstraints {
    fn project(&self, z: &Point) -> Point {
        let n = self.n;
        let mut x = z.clone();
        for i in 0..n {
            x[i * n + i] = 1.0;
        }
        for &(i, j) in &self.pairs {
            let a = 0.5 * (z[i * n + j] - z[j * n + i]);
            x[i * n + j] = a;
            x[j * n + i] = -a;
        }
        x
    }
}

/// `c_i(x) = x^T H_i x - b_i` with symmetric `H_i`.
pub struct QuadraticConstraints {
    h: Vec<DMatrix<f64>>,
    b: DVector<f64>,
}

impl QuadraticConstraints {
    pub fn new(h: Vec<DMatrix<f64>>, b: DVector<f64>) -> Result<Self> {
        if h.len() != b.len() || h.is_empty() {
            return Err(ApError::Dimension("need one right-hand side per quadratic, p >= 1".into()));
        }
        let n = h[0].nrows();
        if h.iter().any(|m| m.shape() != (n, n)) {
            return Err(ApError::Dimension("quadratic forms must share one square shape".into()));
        }
        Ok(Self { h, b })
    }

    pub fn forms(&self) -> &[DMatrix<f64>] {
        &self.h
    }
}

impl ConstraintSystem for QuadraticConstraints {
    fn dim(&self) -> usize {
        self.h[0].nrows()
    }
    fn num_constraints(&self) -> usize {
        self.h.len()
    }
    fn eval(&self, x: &Point) -> DVector<f64> {
        DVector::from_fn(self.h.len(), |i, _| x.dot(&(&self.h[i] * x)) - self.b[i])
    }
    fn jacobian(&self, x: &Point) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.h.iter().map(|h| h * x * 2.0).collect();
        DMatrix::from_columns(&cols)
    }
}
