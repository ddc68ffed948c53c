//! Small dense helpers shared by the set, solver and problem modules.

use faer::prelude::SpSolver;
use nalgebra::{DMatrix, DVector};

/// Row-major reshape of a flat vector into an `m x q` matrix.
pub fn to_matrix(x: &DVector<f64>, m: usize, q: usize) -> DMatrix<f64> {
    debug_assert_eq!(x.len(), m * q);
    DMatrix::from_row_slice(m, q, x.as_slice())
}

/// Row-major flattening, the inverse of [`to_matrix`].
pub fn flatten(a: &DMatrix<f64>) -> DVector<f64> {
    let (m, q) = a.shape();
    DVector::from_fn(m * q, |k, _| a[(k / q, k % q)])
}

/// `(A + A^T) / 2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.read(i, j))
}

fn sorted_order(v: &[f64], descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| {
        let c = if descending { v[j].total_cmp(&v[i]) } else { v[i].total_cmp(&v[j]) };
        c.then(i.cmp(&j))
    });
    order
}

/// Symmetric eigendecomposition of `sym(a)` with eigenvalues sorted ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let e = to_faer(&sym(a)).selfadjoint_eigendecomposition(faer::Side::Lower);
    let raw: Vec<f64> = (0..n).map(|i| e.s().column_vector().read(i)).collect();
    let order = sorted_order(&raw, false);
    let u = e.u();
    let vals = DVector::from_fn(n, |k, _| raw[order[k]]);
    let vecs = DMatrix::from_fn(n, n, |i, k| u.read(i, order[k]));
    (vals, vecs)
}

/// Eigenvalues of `sym(a)`, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let mut v = to_faer(&sym(a)).selfadjoint_eigenvalues(faer::Side::Lower);
    v.sort_by(|p, q| p.total_cmp(q));
    DVector::from_vec(v)
}

/// Thin SVD `A = U diag(s) V^T`, singular values descending.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    let d = to_faer(a).thin_svd();
    let k = a.nrows().min(a.ncols());
    let raw: Vec<f64> = (0..k).map(|i| d.s_diagonal().read(i)).collect();
    let order = sorted_order(&raw, true);
    let (u, v) = (from_faer(d.u()), from_faer(d.v()));
    Svd { u: select_columns(&u, &order), s: DVector::from_fn(k, |i, _| raw[order[i]]), v: select_columns(&v, &order) }
}

/// Singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut v = to_faer(a).singular_values();
    v.sort_by(|p, q| q.total_cmp(p));
    DVector::from_vec(v)
}

/// `V diag(f(lambda)) V^T`.
pub fn spectral_apply(vals: &DVector<f64>, vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fk = f(vals[k]);
        scaled.column_mut(k).scale_mut(fk);
    }
    sym(&(scaled * vecs.transpose()))
}

/// Columns of `v` selected by index.
pub fn select_columns(v: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(v.nrows(), idx.len(), |i, k| v[(i, idx[k])])
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal) columns of `basis`.
pub fn orth_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let want = n - basis.ncols();
    let mut cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(want);
    for i in 0..n {
        if out.len() == want {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v.axpy(-d, c, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 0.5 {
            v /= nv;
            cols.push(v.clone());
            out.push(v);
        }
    }
    if out.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Dimension of the span of `vectors`, using singular values above `rel * sigma_max`.
pub fn span_dim(vectors: &[DVector<f64>], rel: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_columns(vectors);
    numerical_rank(&m, rel)
}

pub fn numerical_rank(a: &DMatrix<f64>, rel: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = singular_values(a);
    let smax = s.max();

    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel * smax).count()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    sym_eigenvalues(a).min()
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm2(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    sym_eigenvalues(a).amax()
}

/// Dense Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    inner: faer::linalg::solvers::Cholesky<f64>,
    dim: usize,
}

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>) -> Option<Self> {
        let p = a.nrows();
        let m = faer::Mat::<f64>::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let inner = m.cholesky(faer::Side::Lower).ok()?;
        // faer accepts tiny positive pivots; reject factors that cannot be trusted
        let l = inner.compute_l();
        for i in 0..p {
            let d = l.read(i, i);
            if !(d.is_finite() && d > 0.0) {
                return None;
            }
        }
        Some(Self { inner, dim: p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = to_faer(b);
        self.inner.solve_in_place(m.as_mut());
        from_faer(m.as_ref())
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut col = faer::Col::<f64>::from_fn(self.dim, |i| b[i]);
        self.inner.solve_in_place(col.as_mut());
        DVector::from_fn(self.dim, |i, _| col.read(i))
    }
}

/// Smallest eigenvalue of `A` estimated by block inverse subspace iteration on a factor of
/// `A + shift I`. Stops once the Ritz estimate settles to `rtol` or after `iters` sweeps.
pub fn min_eigenvalue_inverse_iteration(chol: &Cholesky, shift: f64, iters: usize) -> f64 {
    let p = chol.dim();
    if p == 0 {
        return 0.0;
    }
    let rtol = 1e-8;
    let b = p.min(8);
    // deterministic, generic start block
    let start = DMatrix::from_fn(p, b, |i, j| 1.0 + (((i + 1) * (j + 3) * 7919) % 1009) as f64 / 1009.0);
    let mut q = start.qr().q();
    let mut mu_prev = 0.0;
    let mut mu = 0.0;
    for _ in 0..iters.max(1) {
        let z = chol.solve_mat(&q);
        let t = q.transpose() * &z;
        mu = sym_eigenvalues(&t).max();
        if !(mu.is_finite() && mu > 0.0) {
            return 0.0;
        }
        q = z.qr().q();
        if (mu - mu_prev).abs() <= rtol * mu {
            break;
        }
        mu_prev = mu;
    }
    (1.0 / mu - shift).max(0.0)
}
