//! Concrete projective-map operators `v -> Q(x) v`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{flatten, sym, to_matrix};
use crate::system::SparseVec;

/// A self-adjoint PSD operator frozen at a point of a set.
pub trait ProjectiveMap: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;

    /// `<u, Q v>` for sparse `u`, `v`, when the operator supports it cheaply.
    fn bilinear_sparse(&self, _u: &SparseVec, _v: &SparseVec) -> Option<f64> {
        None
    }

    /// `Q v` for sparse `v`; defaults to the dense product.
    fn apply_sparse(&self, v: &SparseVec) -> DVector<f64> {
        self.apply(&v.to_dense(self.dim()))
    }
}

/// `Q = Diag(d)`.
#[derive(Debug, Clone)]
pub struct DiagonalMap {
    pub diag: DVector<f64>,
}

impl ProjectiveMap for DiagonalMap {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.diag.component_mul(v)
    }
    fn bilinear_sparse(&self, u: &SparseVec, v: &SparseVec) -> Option<f64> {
        Some(sparse_weighted_dot(u, v, |i| self.diag[i]))
    }
}

/// `Q = Diag(d) - s * w w^T`.
#[derive(Debug, Clone)]
pub struct DiagOuterMap {
    pub diag: DVector<f64>,
    pub outer: DVector<f64>,
    pub scale: f64,
}

impl ProjectiveMap for DiagOuterMap {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let c = self.scale * self.outer.dot(v);
        let mut out = self.diag.component_mul(v);
        out.axpy(-c, &self.outer, 1.0);
        out
    }
    fn bilinear_sparse(&self, u: &SparseVec, v: &SparseVec) -> Option<f64> {
        let d = sparse_weighted_dot(u, v, |i| self.diag[i]);
        Some(d - self.scale * u.dot_dense(&self.outer) * v.dot_dense(&self.outer))
    }
}

fn sparse_weighted_dot(u: &SparseVec, v: &SparseVec, w: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (&i, &a) in u.idx.iter().zip(&u.val) {
        for (&j, &b) in v.idx.iter().zip(&v.val) {
            if i == j {
                acc += a * w(i) * b;
            }
        }
    }
    acc
}

/// Symmetric-matrix operator `S -> (L S R + R S L) / 2` with `S = sym(Y)`; `R = I` when `right` is `None`.
#[derive(Debug, Clone)]
pub struct SymSandwichMap {
    pub s: usize,
    pub left: DMatrix<f64>,
    pub right: Option<DMatrix<f64>>,
}

impl ProjectiveMap for SymSandwichMap {
    fn dim(&self) -> usize {
        self.s * self.s
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let y = sym(&to_matrix(v, self.s, self.s));
        let out = match &self.right {
            None => {
                let ly = &self.left * &y;
                (&ly + ly.transpose()) * 0.5
            }
            Some(r) => {
                let lyr = &self.left * &y * r;
                (&lyr + lyr.transpose()) * 0.5
            }
        };
        flatten(&out)
    }
    fn bilinear_sparse(&self, u: &SparseVec, v: &SparseVec) -> Option<f64> {
        if self.right.is_some() {
            return None;
        }
        // <U, Q V> = tr(sym(U) L sym(V)); each flat entry (a, b) of U or V contributes
        // half its weight at (a, b) and at (b, a)
        let s = self.s;
        let mut acc = 0.0;
        for (&ku, &wu) in u.idx.iter().zip(&u.val) {
            let (a, b) = (ku / s, ku % s);
            for (&kv, &wv) in v.idx.iter().zip(&v.val) {
                let (c, d) = (kv / s, kv % s);
                let w = 0.25 * wu * wv;
                for (ur, uc) in [(a, b), (b, a)] {
                    for (vr, vc) in [(c, d), (d, c)] {
                        if vc == ur {
                            acc += w * self.left[(uc, vr)];
                        }
                    }
                }
            }
        }
        Some(acc)
    }
}

/// `D -> (X X^T D + D X^T X) / 2` on `m x q` matrices.
#[derive(Debug, Clone)]
pub struct LowRankMap {
    pub m: usize,
    pub q: usize,
    pub xxt: DMatrix<f64>,
    pub xtx: DMatrix<f64>,
}

impl ProjectiveMap for LowRankMap {
    fn dim(&self) -> usize {
        self.m * self.q
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let d = to_matrix(v, self.m, self.q);
        flatten(&((&self.xxt * &d + &d * &self.xtx) * 0.5))
    }
}

/// `Y -> Y - X sym(X^T Y)` on `m x s` matrices.
#[derive(Debug, Clone)]
pub struct SpectralMap {
    pub m: usize,
    pub s: usize,
    pub x: DMatrix<f64>,
}

impl ProjectiveMap for SpectralMap {
    fn dim(&self) -> usize {
        self.m * self.s
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let y = to_matrix(v, self.m, self.s);
        let inner = sym(&(self.x.transpose() * &y));
        flatten(&(&y - &self.x * inner))
    }
}

/// Dense matrix of an operator, built column by column.
pub fn dense_matrix(map: &dyn ProjectiveMap) -> DMatrix<f64> {
    let n = map.dim();
    let mut q = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        let col = map.apply(&e);
        q.set_column(j, &col);
        e[j] = 0.0;
    }
    q
}
