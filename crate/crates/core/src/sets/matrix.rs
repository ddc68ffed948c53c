//! Matrix kinds. Points are flattened row-major; symmetric kinds act on the symmetric part.

use nalgebra::{DMatrix, DVector};

use super::maps::{LowRankMap, ProjectiveMap, SpectralMap, SymSandwichMap};
use super::{SetKind, ACTIVE_TOL};
use crate::linalg::{flatten, orth_complement, select_columns, spectral_apply, svd, sym, sym_eigen, to_matrix};

pub(super) fn is_matrix_kind(kind: &SetKind) -> bool {
    matches!(
        kind,
        SetKind::SpectralBall { .. }
            | SetKind::PsdCone { .. }
            | SetKind::PsdSpectral { .. }
            | SetKind::LowRankVariety { .. }
            | SetKind::SymLowRank { .. }
            | SetKind::LowRankPsd { .. }
    )
}

fn side(kind: &SetKind) -> usize {
    match *kind {
        SetKind::PsdCone { s } | SetKind::PsdSpectral { s } => s,
        SetKind::SymLowRank { m, .. } | SetKind::LowRankPsd { m, .. } => m,
        _ => unreachable!("not a symmetric kind"),
    }
}

/// Indices (into ascending eigenvalues) of the `r` largest magnitudes; ties go to the lower index.
fn top_abs(vals: &DVector<f64>, r: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].abs().total_cmp(&vals[i].abs()).then(i.cmp(&j)));
    order.truncate(r);
    order
}

fn keep_eigen(vals: &DVector<f64>, vecs: &DMatrix<f64>, keep: &[usize], clamp0: bool) -> DMatrix<f64> {
    let kept = DVector::from_fn(vals.len(), |i, _| {
        if keep.contains(&i) {
            if clamp0 {
                vals[i].max(0.0)
            } else {
                vals[i]
            }
        } else {
            0.0
        }
    });
    spectral_apply(&kept, vecs, |v| v)
}

pub(super) fn project(kind: &SetKind, z: &DVector<f64>) -> DVector<f64> {
    match *kind {
        SetKind::SpectralBall { m, s } => {
            let d = svd(&to_matrix(z, m, s));
            let sc = d.s.map(|v| v.min(1.0));
            flatten(&(&d.u * DMatrix::from_diagonal(&sc) * d.v.transpose()))
        }
        SetKind::LowRankVariety { m, q, r } => {
            let d = svd(&to_matrix(z, m, q));
            let sc = DVector::from_fn(d.s.len(), |i, _| if i < r { d.s[i] } else { 0.0 });
            flatten(&(&d.u * DMatrix::from_diagonal(&sc) * d.v.transpose()))
        }
        _ => {
            let s = side(kind);
            let (vals, vecs) = sym_eigen(&to_matrix(z, s, s));
            let out = match *kind {
                SetKind::PsdCone { .. } => spectral_apply(&vals, &vecs, |v| v.max(0.0)),
                SetKind::PsdSpectral { .. } => spectral_apply(&vals, &vecs, |v| v.clamp(0.0, 1.0)),
                SetKind::SymLowRank { r, .. } => keep_eigen(&vals, &vecs, &top_abs(&vals, r), false),
                SetKind::LowRankPsd { r, .. } => {
                    let keep: Vec<usize> = (0..s).rev().take(r).collect();
                    keep_eigen(&vals, &vecs, &keep, true)
                }
                _ => unreachable!(),
            };
            flatten(&out)
        }
    }
}

pub(super) fn violation(kind: &SetKind, x: &DVector<f64>) -> f64 {
    match *kind {
        SetKind::SpectralBall { m, s } => {
            let sv = crate::linalg::singular_values(&to_matrix(x, m, s));
            (sv.max() - 1.0).max(0.0)
        }
        SetKind::LowRankVariety { m, q, r } => {
            let d = svd(&to_matrix(x, m, q));
            if r < d.s.len() {
                d.s[r]
            } else {
                0.0
            }
        }
        _ => {
            let s = side(kind);
            let a = to_matrix(x, s, s);
            let asym = ((&a - a.transpose()) * 0.5).norm();
            let (vals, _) = sym_eigen(&a);
            let lmin = vals[0];
            let lmax = vals[s - 1];
            let v = match *kind {
                SetKind::PsdCone { .. } => -lmin,
                SetKind::PsdSpectral { .. } => (-lmin).max(lmax - 1.0),
                SetKind::SymLowRank { r, .. } => {
                    let mut mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
                    mags.sort_by(|p, q| q.total_cmp(p));
                    mags.get(r).copied().unwrap_or(0.0)
                }
                SetKind::LowRankPsd { r, .. } => {
                    let extra = if r < s { vals[s - 1 - r].max(0.0) } else { 0.0 };
                    (-lmin).max(extra)
                }
                _ => unreachable!(),
            };
            asym.max(v).max(0.0)
        }
    }
}

pub(super) fn projective_map(kind: &SetKind, x: &DVector<f64>) -> Box<dyn ProjectiveMap> {
    match *kind {
        SetKind::SpectralBall { m, s } => Box::new(SpectralMap { m, s, x: to_matrix(x, m, s) }),
        SetKind::LowRankVariety { m, q, .. } => {
            let a = to_matrix(x, m, q);
            Box::new(LowRankMap { m, q, xxt: &a * a.transpose(), xtx: a.transpose() * &a })
        }
        _ => {
            let s = side(kind);
            let a = sym(&to_matrix(x, s, s));
            match *kind {
                SetKind::PsdCone { .. } | SetKind::LowRankPsd { .. } => {
                    Box::new(SymSandwichMap { s, left: a, right: None })
                }
                SetKind::SymLowRank { .. } => Box::new(SymSandwichMap { s, left: &a * &a, right: None }),
                SetKind::PsdSpectral { .. } => {
                    let right = DMatrix::identity(s, s) - &a;
                    Box::new(SymSandwichMap { s, left: a, right: Some(right) })
                }
                _ => unreachable!(),
            }
        }
    }
}

fn antisymmetric_basis(s: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..s {
        for j in (i + 1)..s {
            let mut e = DMatrix::zeros(s, s);
            e[(i, j)] = c;
            e[(j, i)] = -c;
            out.push(flatten(&e));
        }
    }
    out
}

/// `u_a v_b^T + u_b v_a^T` for `a <= b`, i.e. `U M V^T` over symmetric `M`.
fn symmetric_block_basis(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let k = u.ncols();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a..k {
            let g = u.column(a) * v.column(b).transpose() + u.column(b) * v.column(a).transpose();
            out.push(flatten(&g));
        }
    }
    out
}

pub(super) fn normal_generators(kind: &SetKind, x: &DVector<f64>) -> Vec<DVector<f64>> {
    match *kind {
        SetKind::SpectralBall { m, s } => {
            let d = svd(&to_matrix(x, m, s));
            let top: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] >= 1.0 - ACTIVE_TOL).collect();
            symmetric_block_basis(&select_columns(&d.u, &top), &select_columns(&d.v, &top))
        }
        SetKind::LowRankVariety { m, q, .. } => {
            let d = svd(&to_matrix(x, m, q));
            let thresh = ACTIVE_TOL * d.s.max().max(1.0);
            let live: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] > thresh).collect();
            let u2 = orth_complement(&select_columns(&d.u, &live), m);
            let v2 = orth_complement(&select_columns(&d.v, &live), q);
            let mut out = Vec::new();
            for i in 0..u2.ncols() {
                for j in 0..v2.ncols() {
                    out.push(flatten(&(u2.column(i) * v2.column(j).transpose())));
                }
            }
            out
        }
        _ => {
            let s = side(kind);
            let (vals, vecs) = sym_eigen(&to_matrix(x, s, s));
            let scale = vals.amax().max(1.0);
            let zero: Vec<usize> = (0..s).filter(|&i| vals[i].abs() <= ACTIVE_TOL * scale).collect();
            let mut out = antisymmetric_basis(s);
            let u0 = select_columns(&vecs, &zero);
            out.extend(symmetric_block_basis(&u0, &u0));
            if let SetKind::PsdSpectral { .. } = kind {
                let one: Vec<usize> = (0..s).filter(|&i| vals[i] >= 1.0 - ACTIVE_TOL).collect();
                let u1 = select_columns(&vecs, &one);
                out.extend(symmetric_block_basis(&u1, &u1));
            }
            out
        }
    }
}
