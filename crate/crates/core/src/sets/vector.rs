use nalgebra::DVector;

use super::maps::{DiagOuterMap, DiagonalMap, ProjectiveMap};
use super::{unit, SetKind, ACTIVE_TOL};

pub(super) fn project(kind: &SetKind, z: &DVector<f64>) -> DVector<f64> {
    match kind {
        SetKind::Box { lower, upper } => DVector::from_fn(z.len(), |i, _| z[i].clamp(lower[i], upper[i])),
        SetKind::Orthant { .. } => z.map(|v| v.max(0.0)),
        SetKind::L2Ball { radius, .. } => {
            let nz = z.norm();
            if nz <= *radius {
                z.clone()
            } else {
                z * (*radius / nz)
            }
        }
        SetKind::L1Ball { .. } => project_l1(z),
        SetKind::Simplex { .. } => project_simplex(z),
        SetKind::L0Ball { sparsity, .. } => {
            let mut out = DVector::zeros(z.len());
            for &i in top_magnitudes(z, *sparsity).iter() {
                out[i] = z[i];
            }
            out
        }
        _ => unreachable!("not a vector kind"),
    }
}

/// Indices of the `k` largest magnitudes; ties go to the lower index.
pub(super) fn top_magnitudes(z: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&i, &j| z[j].abs().total_cmp(&z[i].abs()).then(i.cmp(&j)));
    order.truncate(k);
    order
}

pub fn project_simplex(z: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = z.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    z.map(|v| (v - theta).max(0.0))
}

pub fn project_l1(z: &DVector<f64>) -> DVector<f64> {
    if z.lp_norm(1) <= 1.0 {
        return z.clone();
    }
    let a = project_simplex(&z.abs());
    DVector::from_fn(z.len(), |i, _| a[i] * z[i].signum())
}

pub(super) fn violation(kind: &SetKind, x: &DVector<f64>) -> f64 {
    match kind {
        SetKind::Box { lower, upper } => {
            (0..x.len()).map(|i| (lower[i] - x[i]).max(x[i] - upper[i])).fold(0.0, f64::max)
        }
        SetKind::Orthant { .. } => x.iter().map(|v| -v).fold(0.0, f64::max),
        SetKind::L2Ball { radius, .. } => (x.norm() - radius).max(0.0),
        SetKind::L1Ball { .. } => (x.lp_norm(1) - 1.0).max(0.0),
        SetKind::Simplex { .. } => {
            let neg = x.iter().map(|v| -v).fold(0.0, f64::max);
            neg.max((x.sum() - 1.0).abs())
        }
        SetKind::L0Ball { sparsity, .. } => {
            if *sparsity >= x.len() {
                return 0.0;
            }
            let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            a.sort_by(|p, q| q.total_cmp(p));
            a[*sparsity]
        }
        _ => unreachable!("not a vector kind"),
    }
}

pub(super) fn projective_map(kind: &SetKind, x: &DVector<f64>) -> Box<dyn ProjectiveMap> {
    let n = x.len();
    match kind {
        SetKind::Box { lower, upper } => {
            Box::new(DiagonalMap { diag: DVector::from_fn(n, |i, _| ((x[i] - lower[i]) * (upper[i] - x[i])).max(0.0)) })
        }
        SetKind::Orthant { .. } => Box::new(DiagonalMap { diag: x.map(|v| v.max(0.0)) }),
        SetKind::L2Ball { radius, .. } => {
            let r2 = (radius * radius).max(x.norm_squared());
            Box::new(DiagOuterMap { diag: DVector::from_element(n, 1.0), outer: x.clone(), scale: 1.0 / r2 })
        }
        SetKind::L1Ball { .. } => {
            let slack = (1.0 - x.lp_norm(1)).max(0.0);
            Box::new(DiagOuterMap { diag: x.map(|v| v.abs() + slack), outer: x.clone(), scale: 1.0 })
        }
        SetKind::Simplex { .. } => Box::new(DiagOuterMap { diag: x.map(|v| v.max(0.0)), outer: x.clone(), scale: 1.0 }),
        SetKind::L0Ball { .. } => Box::new(DiagonalMap { diag: x.map(|v| v * v) }),
        _ => unreachable!("not a vector kind"),
    }
}

pub(super) fn normal_generators(kind: &SetKind, x: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = x.len();
    let zeros = || (0..n).filter(|&i| x[i].abs() <= ACTIVE_TOL).map(|i| unit(n, i));
    match kind {
        SetKind::Box { lower, upper } => (0..n)
            .filter(|&i| {
                x[i] - lower[i] <= ACTIVE_TOL * lower[i].abs().max(1.0)
                    || upper[i] - x[i] <= ACTIVE_TOL * upper[i].abs().max(1.0)
            })
            .map(|i| unit(n, i))
            .collect(),
        SetKind::Orthant { .. } => (0..n).filter(|&i| x[i] <= ACTIVE_TOL).map(|i| unit(n, i)).collect(),
        SetKind::L2Ball { radius, .. } => {
            if x.norm() >= radius * (1.0 - ACTIVE_TOL) {
                vec![x.clone()]
            } else {
                vec![]
            }
        }
        SetKind::L1Ball { .. } => {
            if x.lp_norm(1) < 1.0 - ACTIVE_TOL {
                return vec![];
            }
            let s = x.map(|v| if v.abs() <= ACTIVE_TOL { 0.0 } else { v.signum() });
            std::iter::once(s).chain(zeros()).collect()
        }
        SetKind::Simplex { .. } => std::iter::once(DVector::from_element(n, 1.0)).chain(zeros()).collect(),
        _ => unreachable!("not a vector kind"),
    }
}
