//! Seeded instance generators for the experiment families.
//!
//! Every generator is a pure function of its dimensions and seed; randomness comes from
//! ChaCha8 seeded with the `u64` seed, with normals drawn by `rand_distr::StandardNormal`.

mod systems;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ApError, Result};
use crate::linalg::{flatten, sym};
use crate::sets::{lq_mass, CatalogSet, ProjectiveSet, SetKind};
use crate::system::{AffineProjector, ConstraintSystem, Point};

pub use systems::{AffineConstraints, CorrelationConstraints, QuadraticConstraints};

/// Identifier of the random generator recorded in instance metadata.
pub const RNG_NAME: &str = "chacha8-u64seed-standard-normal";

fn default_density() -> f64 {
    0.1
}

fn default_q() -> f64 {
    0.5
}

/// An experiment family together with its dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Sparse correlation matrices: `X` PSD, unit diagonal, prescribed zero entries.
    Correlation {
        n: usize,
        #[serde(default = "default_density")]
        density: f64,
    },
    /// `n x m` matrices of rank at most `r` satisfying `p` random linear equations.
    LowrankAffine { n: usize, m: usize, p: usize, r: usize },
    /// Nonnegative vectors satisfying `p` random quadratic equations.
    QpOrthant { n: usize, p: usize },
    /// The l_q ball intersected with `p` random linear equations.
    LqAffine {
        n: usize,
        p: usize,
        #[serde(default = "default_q")]
        q: f64,
    },
    /// `x >= 0` in the plane with `x1 + x2 = 1`, started at `(2, 0)`.
    Toy,
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Correlation { .. } => "correlation",
            FamilySpec::LowrankAffine { .. } => "lowrank_affine",
            FamilySpec::QpOrthant { .. } => "qp_orthant",
            FamilySpec::LqAffine { .. } => "lq_affine",
            FamilySpec::Toy => "toy",
        }
    }

    /// Short human-readable dimension tag, e.g. `n=100,p=10`.
    pub fn dims_label(&self) -> String {
        match *self {
            FamilySpec::Correlation { n, density } => format!("n={n},density={density}"),
            FamilySpec::LowrankAffine { n, m, p, r } => format!("n={n},m={m},p={p},r={r}"),
            FamilySpec::QpOrthant { n, p } => format!("n={n},p={p}"),
            FamilySpec::LqAffine { n, p, q } => format!("n={n},p={p},q={q}"),
            FamilySpec::Toy => "n=2,p=1".to_string(),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<ProblemInstance> {
        match *self {
            FamilySpec::Correlation { n, density } => gen_correlation(n, density, seed),
            FamilySpec::LowrankAffine { n, m, p, r } => gen_lowrank_affine(n, m, p, r, seed),
            FamilySpec::QpOrthant { n, p } => gen_qp_orthant(n, p, seed),
            FamilySpec::LqAffine { n, p, q } => gen_lq_affine(n, p, q, seed),
            FamilySpec::Toy => Ok(gen_toy_orthant_affine()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub family: FamilySpec,
    pub seed: u64,
    pub rng: &'static str,
}

pub struct ProblemInstance {
    pub system: Arc<dyn ConstraintSystem>,
    pub set: CatalogSet,
    pub x0: Point,
    /// Known feasible point.
    pub x_ref: Point,
    pub meta: InstanceMeta,
    /// Closed-form projector onto the constraint manifold, when one exists.
    pub affine: Option<Arc<dyn AffineProjector>>,
}

impl ProblemInstance {
    pub fn affine_projector(&self) -> Option<&dyn AffineProjector> {
        self.affine.as_deref()
    }

    /// `x0` pushed to at least `margin` in every coordinate, for interior-point (Bregman) starts
    /// on orthant instances.
    pub fn interior_start(&self, margin: f64) -> Point {
        self.x0.map(|v| v.max(margin))
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn randn_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Row-major draw order.
fn randn_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..r * c).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(r, c, &data)
}

fn meta(family: FamilySpec, seed: u64) -> InstanceMeta {
    InstanceMeta { family, seed, rng: RNG_NAME }
}

pub fn gen_correlation(n: usize, density: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 2 || !(density > 0.0 && density < 1.0) {
        return Err(ApError::Config(format!(
            "correlation needs n >= 2 and density in (0, 1), got n = {n}, density = {density}"
        )));
    }
    let mut rng = rng_for(seed);
    let k = ((density * (n * n) as f64).round() as usize).max(1);
    let mut w = DMatrix::<f64>::zeros(n, n);
    for pos in rand::seq::index::sample(&mut rng, n * n, k).into_iter() {
        w[(pos / n, pos % n)] = 1.0 - rng.gen::<f64>();
    }
    for j in 0..n {
        if w.column(j).iter().all(|&v| v == 0.0) {
            let i = rng.gen_range(0..n);
            w[(i, j)] = 1.0 - rng.gen::<f64>();
        }
        let nrm = w.column(j).norm();
        w.column_mut(j).unscale_mut(nrm);
    }
    let x_ref_m = sym(&w.tr_mul(&w));
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if x_ref_m[(i, j)] == 0.0 {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(ApError::DegenerateInstance("reference matrix has no zero entries".into()));
    }
    let set = CatalogSet::new(SetKind::PsdCone { s: n })?;
    let noise = randn_mat(&mut rng, n, n);
    let raw = sym(&noise) * 10.0 + &x_ref_m;
    let x0 = set.project(&flatten(&raw), 0.0)?.point;
    let system = Arc::new(CorrelationConstraints::new(n, pairs));
    Ok(ProblemInstance {
        system: system.clone(),
        set,
        x0,
        x_ref: flatten(&x_ref_m),
        meta: meta(FamilySpec::Correlation { n, density }, seed),
        affine: Some(system),
    })
}

pub fn gen_lowrank_affine(n: usize, m: usize, p: usize, r: usize, seed: u64) -> Result<ProblemInstance> {
    if p >= n * m {
        return Err(ApError::Config(format!("need p < n m, got p = {p}")));
    }
    let set = CatalogSet::new(SetKind::LowRankVariety { m: n, q: m, r })?;
    let mut rng = rng_for(seed);
    let draw_h = |rng: &mut ChaCha8Rng| -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..p).map(|_| flatten(&randn_mat(rng, n, m))).collect();
        if cols.is_empty() {
            DMatrix::zeros(n * m, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    let h = draw_h(&mut rng);
    let w = randn_mat(&mut rng, n, m);
    let x_ref = set.project(&flatten(&w), 0.0)?.point;
    let b = h.tr_mul(&x_ref);
    let system = match AffineConstraints::new(h, b) {
        Ok(s) => s,
        Err(ApError::DegenerateInstance(_)) => {
            let h = draw_h(&mut rng);
            let b = h.tr_mul(&x_ref);
            AffineConstraints::new(h, b)?
        }
        Err(e) => return Err(e),
    };
    let x0 = set.project(&flatten(&randn_mat(&mut rng, n, m)), 0.0)?.point;
    let system = Arc::new(system);
    Ok(ProblemInstance {
        system: system.clone(),
        set,
        x0,
        x_ref,
        meta: meta(FamilySpec::LowrankAffine { n, m, p, r }, seed),
        affine: Some(system),
    })
}

pub fn gen_qp_orthant(n: usize, p: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || p == 0 {
        return Err(ApError::Config(format!("qp needs n, p >= 1, got n = {n}, p = {p}")));
    }
    let mut rng = rng_for(seed);
    let h: Vec<DMatrix<f64>> = (0..p).map(|_| sym(&randn_mat(&mut rng, n, n))).collect();
    let x_ref = randn_vec(&mut rng, n).abs();
    let b = DVector::from_fn(p, |i, _| x_ref.dot(&(&h[i] * &x_ref)));
    let set = CatalogSet::new(SetKind::Orthant { n })?;
    let x0 = set.project(&(&x_ref + randn_vec(&mut rng, n) * 0.1), 0.0)?.point;
    Ok(ProblemInstance {
        system: Arc::new(QuadraticConstraints::new(h, b)?),
        set,
        x0,
        x_ref,
        meta: meta(FamilySpec::QpOrthant { n, p }, seed),
        affine: None,
    })
}

pub fn gen_lq_affine(n: usize, p: usize, q: f64, seed: u64) -> Result<ProblemInstance> {
    if p == 0 || p >= n {
        return Err(ApError::Config(format!("lq family needs 1 <= p < n, got p = {p}, n = {n}")));
    }
    let set = CatalogSet::new(SetKind::LqBall { n, q })?;
    let mut rng = rng_for(seed);
    let x_ref = lq_sphere_point(&randn_vec(&mut rng, n), (2 * p).min(n), q);
    let h = randn_mat(&mut rng, n, p);
    let b = h.tr_mul(&x_ref);
    let system = Arc::new(AffineConstraints::new(h, b)?);
    let x0 = set.project(&(&x_ref + randn_vec(&mut rng, n) * 1e-5), 0.0)?.point;
    Ok(ProblemInstance {
        system: system.clone(),
        set,
        x0,
        x_ref,
        meta: meta(FamilySpec::LqAffine { n, p, q }, seed),
        affine: Some(system),
    })
}

/// Keeps the `k` largest-magnitude entries of `z` (ties to the lower index) and
/// scales them onto `||x||_q^q = 1`. The exact projection of a Gaussian draw is
/// almost always 1-sparse, where `Q` vanishes; a `k`-sparse point with `k > p`
/// keeps the Gram matrix nonsingular.
pub fn lq_sphere_point(z: &DVector<f64>, k: usize, q: f64) -> DVector<f64> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
    let mut x = DVector::zeros(z.len());
    for &i in order.iter().take(k) {
        x[i] = z[i];
    }
    let m = lq_mass(&x, q);
    if m > 0.0 {
        x *= m.powf(-1.0 / q);
    }
    x
}

pub fn gen_toy_orthant_affine() -> ProblemInstance {
    let system = Arc::new(
        AffineConstraints::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), DVector::from_element(1, 1.0))
            .expect("independent gradient"),
    );
    ProblemInstance {
        system: system.clone(),
        set: CatalogSet::new(SetKind::Orthant { n: 2 }).expect("valid orthant"),
        x0: DVector::from_vec(vec![2.0, 0.0]),
        x_ref: DVector::from_vec(vec![1.0, 0.0]),
        meta: meta(FamilySpec::Toy, 0),
        affine: Some(system),
    }
}
