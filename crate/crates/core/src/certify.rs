//! Numerical certification of projective maps: positive semidefiniteness,
//! null space against the normal-cone generators, and the quadratic
//! distance bound `dist(x + Q(x)(t d), X) <= rho t^2`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ApError, Result};
use crate::linalg::{flatten, numerical_rank, span_dim, sym, sym_eigenvalues};
use crate::sets::{dense_matrix, CatalogSet, ProjectiveSet, SetKind};
use crate::system::{ConstraintSystem, Point};
use crate::trace::loglog_slope;

pub const PSD_REL_TOL: f64 = 1e-10;
pub const NULL_ABS_TOL: f64 = 1e-10;
pub const RANK_REL_TOL: f64 = 1e-8;
pub const SLOPE_MIN: f64 = 1.9;
/// Distances below this are roundoff; the bound is then vacuous.
pub const DIST_FLOOR: f64 = 1e-13;
pub const STEP_SCALES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Boundary,
    Interior,
}

#[derive(Debug, Clone)]
pub struct PsdCheck {
    pub min_eig: f64,
    pub norm: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct NullSpaceCheck {
    /// `max_g ||Q g|| / ||g||` over the generators.
    pub max_residual: f64,
    pub rank_q: usize,
    pub expected_rank: usize,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct DistanceCheck {
    pub scales: Vec<f64>,
    pub dists: Vec<f64>,
    /// `None` when fewer than two distances clear the floor.
    pub slope: Option<f64>,
    pub bound_ok: bool,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct PointCertificate {
    pub region: Region,
    pub x: Point,
    pub psd: PsdCheck,
    /// `None` for kinds without a normal-cone oracle.
    pub null_space: Option<NullSpaceCheck>,
    pub distance: DistanceCheck,
}

impl PointCertificate {
    pub fn ok(&self) -> bool {
        self.psd.ok && self.null_space.as_ref().is_none_or(|c| c.ok) && self.distance.ok
    }
}

#[derive(Debug, Clone)]
pub struct SetCertificate {
    pub kind: SetKind,
    pub points: Vec<PointCertificate>,
}

impl SetCertificate {
    pub fn failures(&self) -> impl Iterator<Item = &PointCertificate> {
        self.points.iter().filter(|p| !p.ok())
    }

    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.ok())
    }
}

pub fn psd_check(set: &dyn ProjectiveSet, x: &Point) -> Result<PsdCheck> {
    let q = dense_matrix(set.projective_map(x)?.as_ref());
    let asym = (&q - q.transpose()).amax();
    let qs = sym(&q);
    let eig = sym_eigenvalues(&qs);
    let norm = eig.amax();
    let min_eig = eig.min();
    let ok = min_eig >= -PSD_REL_TOL * norm.max(1.0) && asym <= PSD_REL_TOL * norm.max(1.0);
    Ok(PsdCheck { min_eig, norm, ok })
}

/// `Ok(None)` when the set has no normal-cone oracle.
pub fn null_space_check(set: &dyn ProjectiveSet, x: &Point) -> Result<Option<NullSpaceCheck>> {
    let gens = match set.normal_generators(x) {
        Ok(g) => g,
        Err(ApError::Unsupported(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let map = set.projective_map(x)?;
    let max_residual =
        gens.iter().filter(|g| g.norm() > 0.0).map(|g| map.apply(g).norm() / g.norm()).fold(0.0, f64::max);
    let q = dense_matrix(map.as_ref());
    let rank_q = numerical_rank(&q, RANK_REL_TOL);
    let expected_rank = set.dim() - span_dim(&gens, RANK_REL_TOL);
    Ok(Some(NullSpaceCheck {
        max_residual,
        rank_q,
        expected_rank,
        ok: max_residual <= NULL_ABS_TOL && rank_q == expected_rank,
    }))
}

/// Distance of `x + Q(x)(t d)` to the set over `STEP_SCALES`, with `d` a unit direction.
pub fn distance_check(set: &dyn ProjectiveSet, x: &Point, d: &DVector<f64>) -> Result<DistanceCheck> {
    let map = set.projective_map(x)?;
    let qd = map.apply(&(d / d.norm()));
    let rho = set.rho_test();
    let mut dists = Vec::with_capacity(STEP_SCALES.len());
    for &t in &STEP_SCALES {
        let y = x + &qd * t;
        let p = set.project(&y, 0.0)?;
        dists.push((&y - &p.point).norm());
    }
    let bound_ok = STEP_SCALES.iter().zip(&dists).all(|(t, d)| *d <= rho * t * t);
    let pts: Vec<(f64, f64)> =
        STEP_SCALES.iter().zip(&dists).filter(|(_, d)| **d > DIST_FLOOR).map(|(t, d)| (t.ln(), d.ln())).collect();
    let slope = loglog_slope(&pts);
    let ok = bound_ok && slope.is_none_or(|s| s >= SLOPE_MIN);
    Ok(DistanceCheck { scales: STEP_SCALES.to_vec(), dists, slope, bound_ok, ok })
}

pub fn certify_point(set: &dyn ProjectiveSet, x: &Point, region: Region, d: &DVector<f64>) -> Result<PointCertificate> {
    Ok(PointCertificate {
        region,
        x: x.clone(),
        psd: psd_check(set, x)?,
        null_space: null_space_check(set, x)?,
        distance: distance_check(set, x, d)?,
    })
}

/// Certifies `count` points, alternating boundary and interior samples.
pub fn certify_set(set: &CatalogSet, count: usize, seed: u64) -> Result<SetCertificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let region = if i % 2 == 0 { Region::Boundary } else { Region::Interior };
        let x = sample_point(set.kind(), region, &mut rng);
        let d = gaussian(&mut rng, set.dim());
        points.push(certify_point(set, &x, region, &d)?);
    }
    Ok(SetCertificate { kind: set.kind().clone(), points })
}

/// One set of each kind, every ambient dimension at most 50.
pub fn desk_catalog() -> Vec<SetKind> {
    vec![
        SetKind::Box { lower: vec![-1.0, 0.0, -2.0, 0.5, -0.5, 1.0], upper: vec![1.0, 2.0, -1.0, 1.5, 0.5, 3.0] },
        SetKind::Orthant { n: 8 },
        SetKind::L2Ball { n: 6, radius: 1.5 },
        SetKind::L1Ball { n: 8 },
        SetKind::Simplex { n: 8 },
        SetKind::L0Ball { n: 10, sparsity: 3 },
        SetKind::LqBall { n: 8, q: 0.5 },
        SetKind::SpectralBall { m: 4, s: 5 },
        SetKind::PsdCone { s: 5 },
        SetKind::PsdSpectral { s: 5 },
        SetKind::LowRankVariety { m: 5, q: 6, r: 2 },
        SetKind::SymLowRank { m: 5, r: 2 },
        SetKind::LowRankPsd { m: 5, r: 2 },
    ]
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn gaussian_mat(rng: &mut ChaCha8Rng, m: usize, q: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, q, |_, _| rng.sample(StandardNormal))
}

/// Random subset of `0..n` of the given size.
fn pick(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    index::sample(rng, n, k.min(n)).into_vec()
}

/// Between one and half of the indices.
fn pick_some(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let k = rng.gen_range(1..=(n / 2).max(1));
    pick(rng, n, k)
}

/// Orthonormal `n x k` factor of a Gaussian matrix.
fn orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let q = gaussian_mat(rng, n, k).qr().q();
    q.columns(0, k).into_owned()
}

/// Symmetric matrix with the given spectrum and a random eigenbasis.
fn with_spectrum(rng: &mut ChaCha8Rng, vals: &[f64]) -> DMatrix<f64> {
    let n = vals.len();
    let u = orthonormal(rng, n, n);
    &u * DMatrix::from_diagonal(&DVector::from_column_slice(vals)) * u.transpose()
}

/// Matrix with the given singular values (zero-padded) and random factors.
fn with_singular_values(rng: &mut ChaCha8Rng, m: usize, q: usize, vals: &[f64]) -> DMatrix<f64> {
    let k = vals.len();
    let u = orthonormal(rng, m, k);
    let v = orthonormal(rng, q, k);
    &u * DMatrix::from_diagonal(&DVector::from_column_slice(vals)) * v.transpose()
}

/// A random point of the set. Boundary samples have active constraints
/// (zero coordinates, saturated norms, rank drops, spectrum at the bounds).
pub fn sample_point(kind: &SetKind, region: Region, rng: &mut ChaCha8Rng) -> Point {
    let boundary = region == Region::Boundary;
    match kind {
        SetKind::Box { lower, upper } => {
            let n = lower.len();
            let mut x = DVector::from_fn(n, |i, _| lower[i] + (upper[i] - lower[i]) * rng.gen_range(0.1..0.9));
            if boundary {
                for i in pick_some(rng, n) {
                    x[i] = if rng.gen_bool(0.5) { lower[i] } else { upper[i] };
                }
            }
            x
        }
        SetKind::Orthant { n } => {
            let mut x = DVector::from_fn(*n, |_, _| rng.gen_range(0.2..2.0));
            if boundary {
                for i in pick_some(rng, *n) {
                    x[i] = 0.0;
                }
            }
            x
        }
        SetKind::L2Ball { n, radius } => {
            let z = gaussian(rng, *n);
            let r = if boundary { *radius } else { radius * rng.gen_range(0.2..0.8) };
            let scale = r / z.norm();
            z * scale
        }
        SetKind::L1Ball { n } | SetKind::Simplex { n } => {
            let mut x = DVector::from_fn(*n, |_, _| rng.gen_range(0.2..1.0));
            if boundary {
                for i in pick_some(rng, *n) {
                    x[i] = 0.0;
                }
            }
            if matches!(kind, SetKind::L1Ball { .. }) {
                for v in x.iter_mut() {
                    if rng.gen_bool(0.5) {
                        *v = -*v;
                    }
                }
                let total = x.lp_norm(1);
                let mass = if boundary { 1.0 } else { rng.gen_range(0.3..0.8) };
                x * (mass / total)
            } else {
                let total = x.sum();
                x / total
            }
        }
        SetKind::L0Ball { n, sparsity } => {
            let k = if boundary { *sparsity } else { rng.gen_range(1..=*sparsity) };
            let mut x = DVector::zeros(*n);
            for i in pick(rng, *n, k) {
                x[i] = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            x
        }
        SetKind::LqBall { n, q } => {
            let k = if boundary { rng.gen_range(2..=*n) } else { *n };
            let mut x: DVector<f64> = DVector::zeros(*n);
            for i in pick(rng, *n, k) {
                x[i] = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            let mass: f64 = x.iter().map(|v| v.abs().powf(*q)).sum();
            let target = if boundary { 1.0 } else { rng.gen_range(0.3..0.8) };
            x * (target / mass).powf(1.0 / q)
        }
        SetKind::SpectralBall { m, s } => {
            let k = (*m).min(*s);
            let vals: Vec<f64> =
                (0..k).map(|i| if boundary && i < 2 { 1.0 } else { rng.gen_range(0.1..0.9) }).collect();
            flatten(&with_singular_values(rng, *m, *s, &vals))
        }
        SetKind::PsdCone { s } => {
            let vals: Vec<f64> =
                (0..*s).map(|i| if boundary && i < 2 { 0.0 } else { rng.gen_range(0.3..1.2) }).collect();
            flatten(&with_spectrum(rng, &vals))
        }
        SetKind::PsdSpectral { s } => {
            let vals: Vec<f64> = (0..*s)
                .map(|i| match (boundary, i) {
                    (true, 0) => 0.0,
                    (true, 1) => 1.0,
                    _ => rng.gen_range(0.2..0.8),
                })
                .collect();
            flatten(&with_spectrum(rng, &vals))
        }
        SetKind::LowRankVariety { m, q, r } => {
            let d = if boundary { *r } else { rng.gen_range(1..=*r) };
            let vals: Vec<f64> = (0..d).map(|_| rng.gen_range(0.4..1.2)).collect();
            flatten(&with_singular_values(rng, *m, *q, &vals))
        }
        SetKind::SymLowRank { m, r } => {
            let d = if boundary { *r } else { rng.gen_range(1..=*r) };
            let vals: Vec<f64> = (0..*m)
                .map(|i| if i < d { rng.gen_range(0.4..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 })
                .collect();
            flatten(&with_spectrum(rng, &vals))
        }
        SetKind::LowRankPsd { m, r } => {
            let d = if boundary { *r } else { rng.gen_range(1..=*r) };
            let vals: Vec<f64> = (0..*m).map(|i| if i < d { rng.gen_range(0.4..1.2) } else { 0.0 }).collect();
            flatten(&with_spectrum(rng, &vals))
        }
    }
}

/// Points of `X` near the feasible `x_ref` whose residuals `||c||` are spread
/// log-uniformly over `[lo, hi]`. Draws are `Pi_X(x_ref + t g)` with `t` tuned to the target.
pub fn near_feasible_samples(
    cs: &dyn ConstraintSystem,
    set: &dyn ProjectiveSet,
    x_ref: &Point,
    (lo, hi): (f64, f64),
    count: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count {
        attempts += 1;
        let target = (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp();
        let g = gaussian(&mut rng, x_ref.len());
        let g = &g / g.norm();
        // secant on log r versus log t
        let mut t = target;
        for _ in 0..6 {
            let y = set.project(&(x_ref + &g * t), 0.0)?.point;
            let r = cs.eval(&y).norm();
            if r <= 0.0 || !r.is_finite() {
                break;
            }
            if (r / target).ln().abs() < 0.05 {
                break;
            }
            t *= target / r;
        }
        let y = set.project(&(x_ref + &g * t), 0.0)?.point;
        let r = cs.eval(&y).norm();
        if r >= lo && r <= hi {
            out.push(y);
        }
    }
    Ok(out)
}

/// Least-squares slope of `log b` against `log a` over pairs with both entries above `floor`.
pub fn loglog_fit(pairs: &[(f64, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        pairs.iter().filter(|(a, b)| *a > floor && *b > floor).map(|(a, b)| (a.ln(), b.ln())).collect();
    loglog_slope(&pts)
}
