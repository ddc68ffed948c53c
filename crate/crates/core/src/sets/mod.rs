//! Catalog of projective sets: projections, projective maps and normal-cone generators.

mod lq;
pub mod maps;
mod matrix;
mod vector;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, ApError, Result};
use crate::system::Point;

pub use lq::{lq_mass, lq_reweighted_point, project_lq};
pub use maps::{dense_matrix, ProjectiveMap};

/// Relative tolerance used when checking that a point belongs to a set before building `Q(x)`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Relative tolerance for detecting active constraints, zero entries and zero eigenvalues.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Result of a (possibly inexact) projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Point,
    /// Estimated distance from `point` to the exact projection.
    pub error: f64,
}

impl Projection {
    pub fn exact(point: Point) -> Self {
        Self { point, error: 0.0 }
    }
}

/// A closed set with a cheap (approximate) projection and a projective map.
pub trait ProjectiveSet: Send + Sync {
    fn dim(&self) -> usize;
    fn project(&self, z: &Point, tol: f64) -> Result<Projection>;
    /// Amount by which `x` violates membership (zero inside the set).
    fn violation(&self, x: &Point) -> f64;
    fn contains(&self, x: &Point, tol: f64) -> bool {
        x.len() == self.dim() && self.violation(x) <= tol
    }
    /// `Q(x)` frozen at `x`; fails with `OutsideSet` if `x` is not in the set.
    fn projective_map(&self, x: &Point) -> Result<Box<dyn ProjectiveMap>>;
    fn apply_q(&self, x: &Point, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(ApError::Dimension(format!("direction has length {}, set dim {}", v.len(), self.dim())));
        }
        Ok(self.projective_map(x)?.apply(v))
    }
    /// Vectors spanning the range of the normal cone at `x`.
    fn normal_generators(&self, x: &Point) -> Result<Vec<DVector<f64>>>;
    /// Constant used by the distance-bound certification.
    fn rho_test(&self) -> f64 {
        10.0
    }
}

/// Set kinds and their parameters. Vectors live in `R^n`; matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetKind {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Orthant {
        n: usize,
    },
    L2Ball {
        n: usize,
        radius: f64,
    },
    /// Unit l1 ball.
    L1Ball {
        n: usize,
    },
    /// Probability simplex.
    Simplex {
        n: usize,
    },
    /// Vectors with at most `sparsity` nonzeros.
    L0Ball {
        n: usize,
        sparsity: usize,
    },
    /// `{ x : sum |x_i|^q <= 1 }`, `0 < q <= 1`.
    LqBall {
        n: usize,
        q: f64,
    },
    /// `m x s` matrices with spectral norm at most one.
    SpectralBall {
        m: usize,
        s: usize,
    },
    PsdCone {
        s: usize,
    },
    /// Symmetric `s x s` matrices with eigenvalues in `[0, 1]`.
    PsdSpectral {
        s: usize,
    },
    /// `m x q` matrices of rank at most `r`.
    LowRankVariety {
        m: usize,
        q: usize,
        r: usize,
    },
    SymLowRank {
        m: usize,
        r: usize,
    },
    LowRankPsd {
        m: usize,
        r: usize,
    },
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::Box { .. } => "box",
            SetKind::Orthant { .. } => "orthant",
            SetKind::L2Ball { .. } => "l2_ball",
            SetKind::L1Ball { .. } => "l1_ball",
            SetKind::Simplex { .. } => "simplex",
            SetKind::L0Ball { .. } => "l0_ball",
            SetKind::LqBall { .. } => "lq_ball",
            SetKind::SpectralBall { .. } => "spectral_ball",
            SetKind::PsdCone { .. } => "psd_cone",
            SetKind::PsdSpectral { .. } => "psd_spectral",
            SetKind::LowRankVariety { .. } => "low_rank_variety",
            SetKind::SymLowRank { .. } => "sym_low_rank",
            SetKind::LowRankPsd { .. } => "low_rank_psd",
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            SetKind::Box { ref lower, .. } => lower.len(),
            SetKind::Orthant { n }
            | SetKind::L2Ball { n, .. }
            | SetKind::L1Ball { n }
            | SetKind::Simplex { n }
            | SetKind::L0Ball { n, .. }
            | SetKind::LqBall { n, .. } => n,
            SetKind::SpectralBall { m, s } => m * s,
            SetKind::PsdCone { s } | SetKind::PsdSpectral { s } => s * s,
            SetKind::LowRankVariety { m, q, .. } => m * q,
            SetKind::SymLowRank { m, .. } | SetKind::LowRankPsd { m, .. } => m * m,
        }
    }

    /// True for kinds whose points are symmetric matrices.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            SetKind::PsdCone { .. }
                | SetKind::PsdSpectral { .. }
                | SetKind::SymLowRank { .. }
                | SetKind::LowRankPsd { .. }
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ApError::Config(m));
        match self {
            SetKind::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return bad("box bounds must be nonempty and of equal length".into());
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
                    return bad("box bounds must be finite with lower < upper".into());
                }
            }
            SetKind::L2Ball { n, radius } => {
                if *n == 0 || !(*radius > 0.0 && radius.is_finite()) {
                    return bad("l2 ball needs n >= 1 and a positive radius".into());
                }
            }
            SetKind::L0Ball { n, sparsity } => {
                if *n == 0 || *sparsity == 0 || sparsity > n {
                    return bad(format!("l0 ball needs 1 <= sparsity <= n, got {sparsity} of {n}"));
                }
            }
            SetKind::LqBall { n, q } => {
                if *n == 0 || !(*q > 0.0 && *q <= 1.0) {
                    return bad(format!("lq ball needs n >= 1 and 0 < q <= 1, got q = {q}"));
                }
            }
            SetKind::LowRankVariety { m, q, r } => {
                if *r == 0 || *r >= (*m).min(*q) {
                    return bad(format!("low-rank variety needs 1 <= r < min(m, q), got r = {r}"));
                }
            }
            SetKind::SymLowRank { m, r } => {
                if *r == 0 || r >= m {
                    return bad(format!("symmetric low-rank set needs 1 <= r < m, got r = {r}"));
                }
            }
            SetKind::LowRankPsd { m, r } => {
                if *r == 0 || r > m {
                    return bad(format!("low-rank psd set needs 1 <= r <= m, got r = {r}"));
                }
            }
            other => {
                if other.dim() == 0 {
                    return bad("set dimension must be positive".into());
                }
            }
        }
        Ok(())
    }
}

/// A validated catalog set.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSet {
    kind: SetKind,
    rho_test: f64,
}

impl CatalogSet {
    pub fn new(kind: SetKind) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, rho_test: 10.0 })
    }

    pub fn with_rho_test(mut self, rho: f64) -> Self {
        self.rho_test = rho;
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    fn ensure_member(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(ApError::Dimension(format!("point has length {}, set dim {}", x.len(), self.dim())));
        }
        check_finite(x.as_slice(), "point")?;
        let v = self.violation(x);
        let scale = x.amax().max(1.0);
        if v > MEMBERSHIP_TOL * scale {
            return Err(ApError::OutsideSet { violation: v });
        }
        Ok(())
    }
}

impl ProjectiveSet for CatalogSet {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn project(&self, z: &Point, tol: f64) -> Result<Projection> {
        if z.len() != self.dim() {
            return Err(ApError::Dimension(format!("point has length {}, set dim {}", z.len(), self.dim())));
        }
        check_finite(z.as_slice(), "projection input")?;
        match &self.kind {
            SetKind::LqBall { q, .. } => project_lq(z, *q, tol),
            SetKind::Box { .. }
            | SetKind::Orthant { .. }
            | SetKind::L2Ball { .. }
            | SetKind::L1Ball { .. }
            | SetKind::Simplex { .. }
            | SetKind::L0Ball { .. } => Ok(Projection::exact(vector::project(&self.kind, z))),
            _ => Ok(Projection::exact(matrix::project(&self.kind, z))),
        }
    }

    fn violation(&self, x: &Point) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        match &self.kind {
            SetKind::LqBall { q, .. } => (lq_mass(x, *q) - 1.0).max(0.0),
            k if k.dim() == x.len() && matrix::is_matrix_kind(k) => matrix::violation(k, x),
            k => vector::violation(k, x),
        }
    }

    fn projective_map(&self, x: &Point) -> Result<Box<dyn ProjectiveMap>> {
        self.ensure_member(x)?;
        Ok(match &self.kind {
            SetKind::LqBall { q, .. } => Box::new(lq::projective_map(x, *q)),
            k if matrix::is_matrix_kind(k) => matrix::projective_map(k, x),
            k => vector::projective_map(k, x),
        })
    }

    fn normal_generators(&self, x: &Point) -> Result<Vec<DVector<f64>>> {
        self.ensure_member(x)?;
        match &self.kind {
            SetKind::L0Ball { .. } => {
                Err(ApError::Unsupported("normal generators are not provided for the l0 ball".into()))
            }
            SetKind::LqBall { q, .. } => Ok(lq::normal_generators(x, *q)),
            k if matrix::is_matrix_kind(k) => Ok(matrix::normal_generators(k, x)),
            k => Ok(vector::normal_generators(k, x)),
        }
    }

    fn rho_test(&self) -> f64 {
        self.rho_test
    }
}

pub(crate) fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}
