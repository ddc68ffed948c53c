//! The l_q ball `{ x : sum |x_i|^q <= 1 }` for `0 < q <= 1`.
//!
//! The projection is nonconvex. Each candidate support (the full vector and the `k` largest
//! magnitudes for a spread of `k`) is run through a reweighted weighted-l1 fixed point and then
//! polished by Newton's method on the KKT system; the closest feasible candidate wins.

use nalgebra::DVector;

use super::maps::DiagOuterMap;
use super::{unit, Projection, ACTIVE_TOL};
use crate::error::{ApError, Result};

const MAX_REWEIGHT: usize = 200;
const BISECTION_STEPS: usize = 80;
const MAX_NEWTON: usize = 60;

#[inline]
fn qpow(v: f64, q: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if q == 0.5 {
        v.sqrt()
    } else {
        v.powf(q)
    }
}

/// `sum |x_i|^q`.
pub fn lq_mass(x: &DVector<f64>, q: f64) -> f64 {
    x.iter().map(|v| qpow(v.abs(), q)).sum()
}

fn mass(y: &[f64], q: f64) -> f64 {
    y.iter().map(|&v| qpow(v, q)).sum()
}

/// Projection onto the l_q ball; `tol` bounds the reported error estimate.
pub fn project_lq(z: &DVector<f64>, q: f64, tol: f64) -> Result<Projection> {
    project_lq_with(z, q, tol, true)
}

/// The reweighted fixed point started from `z` itself, polished on its support: a stationary
/// point of the projection problem, not necessarily the nearest point.
pub fn lq_reweighted_point(z: &DVector<f64>, q: f64, tol: f64) -> Result<Projection> {
    project_lq_with(z, q, tol, false)
}

fn project_lq_with(z: &DVector<f64>, q: f64, tol: f64, multistart: bool) -> Result<Projection> {
    if lq_mass(z, q) <= 1.0 {
        return Ok(Projection::exact(z.clone()));
    }
    let n = z.len();
    let a: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let scale = a.iter().copied().fold(1.0, f64::max);
    let target = tol.max(16.0 * f64::EPSILON * scale);

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let candidates = if multistart { starts(&a) } else { vec![a.clone()] };
    for start in candidates {
        let (y, change) = reweighted(&a, q, &start);
        let (mut y, est) = match polish(&a, q, &y, scale) {
            Some(p) => p,
            None => (y, change),
        };
        let m = mass(&y, q);
        if m > 1.0 {
            let s = m.powf(-1.0 / q);
            y.iter_mut().for_each(|v| *v *= s);
        }
        let obj: f64 = a.iter().zip(&y).map(|(ai, yi)| (ai - yi) * (ai - yi)).sum();
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, y, est));
        }
    }
    let (_, y, est) = best.expect("at least one start");
    if !(est <= target) {
        return Err(ApError::StalledInnerSolve { estimate: est, target });
    }
    let point = DVector::from_fn(n, |i, _| y[i] * z[i].signum());
    Ok(Projection { point, error: est })
}

/// The full vector plus its restrictions to the `k` largest entries.
fn starts(a: &[f64]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    let mut sizes: Vec<usize> = Vec::new();
    if n <= 12 {
        sizes.extend(1..n);
    } else {
        let mut k = 1.0f64;
        while (k as usize) < n {
            let kk = k as usize;
            if sizes.last() != Some(&kk) {
                sizes.push(kk);
            }
            k = (k * 1.5).max(k + 1.0);
        }
    }
    let mut out = vec![a.to_vec()];
    for k in sizes {
        let mut s = vec![0.0; n];
        for &i in &order[..k] {
            s[i] = a[i];
        }
        out.push(s);
    }
    out
}

/// Reweighted fixed point `y <- (a - lambda w(y))_+` with `lambda` placing `y` on the sphere.
fn reweighted(a: &[f64], q: f64, start: &[f64]) -> (Vec<f64>, f64) {
    let scale = a.iter().copied().fold(1.0, f64::max);
    let mut y = start.to_vec();
    let mut w = vec![0.0; a.len()];
    let mut change = f64::INFINITY;
    for t in 0..MAX_REWEIGHT {
        let eps = (1e-3 * 0.5f64.powi(t as i32)).max(1e-12);
        for (wi, &yi) in w.iter_mut().zip(&y) {
            *wi = q * (yi + eps).powf(q - 1.0);
        }
        let lam = radius_multiplier(a, &w, q);
        change = 0.0;
        for i in 0..a.len() {
            let v = (a[i] - lam * w[i]).max(0.0);
            change = f64::max(change, (v - y[i]).abs());
            y[i] = v;
        }
        if eps <= 1e-12 && change <= 1e-14 * scale {
            break;
        }
    }
    (y, change)
}

/// Bisection for `lambda` with `sum (a_i - lambda w_i)_+^q = 1`.
fn radius_multiplier(a: &[f64], w: &[f64], q: f64) -> f64 {
    let f = |lam: f64| -> f64 { a.iter().zip(w).map(|(&ai, &wi)| qpow(ai - lam * wi, q)).sum::<f64>() - 1.0 };
    let mut lo = 0.0;
    let mut hi = a.iter().zip(w).map(|(&ai, &wi)| ai / wi).fold(0.0, f64::max);
    if f(lo) <= 0.0 {
        return 0.0;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Newton's method on `y_i - a_i + lambda q y_i^(q-1) = 0`, `sum y_i^q = 1` over the support of `y`.
/// Returns the polished point and its last step length.
fn polish(a: &[f64], q: f64, y0: &[f64], scale: f64) -> Option<(Vec<f64>, f64)> {
    let supp: Vec<usize> = (0..a.len()).filter(|&i| y0[i] > 0.0).collect();
    if supp.is_empty() {
        return None;
    }
    let mut y: Vec<f64> = supp.iter().map(|&i| y0[i]).collect();
    let b0: Vec<f64> = y.iter().map(|&v| q * v.powf(q - 1.0)).collect();
    let mut lam = supp.iter().enumerate().map(|(k, &i)| b0[k] * (a[i] - y[k])).sum::<f64>()
        / b0.iter().map(|v| v * v).sum::<f64>();
    let m = supp.len();
    let mut step = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let mut sum_bf = 0.0;
        let mut sum_bb = 0.0;
        let mut g = -1.0;
        let mut f = vec![0.0; m];
        let mut h = vec![0.0; m];
        let mut b = vec![0.0; m];
        for k in 0..m {
            let yk = y[k];
            let pk = yk.powf(q - 1.0);
            b[k] = q * pk;
            f[k] = yk - a[supp[k]] + lam * b[k];
            h[k] = 1.0 + lam * q * (q - 1.0) * pk / yk;
            if h[k].abs() < 1e-12 {
                return None;
            }
            g += yk * pk;
            sum_bf += b[k] * f[k] / h[k];
            sum_bb += b[k] * b[k] / h[k];
        }
        if sum_bb.abs() < 1e-300 {
            return None;
        }
        let dlam = (g - sum_bf) / sum_bb;
        let dy: Vec<f64> = (0..m).map(|k| (-f[k] - b[k] * dlam) / h[k]).collect();
        let mut s = 1.0;
        let mut halvings = 0;
        while (0..m).any(|k| y[k] + s * dy[k] <= 0.0) {
            s *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return None;
            }
        }
        step = 0.0;
        for k in 0..m {
            y[k] += s * dy[k];
            step = f64::max(step, (s * dy[k]).abs());
        }
        lam += s * dlam;
        if !lam.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if step <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let mut out = vec![0.0; a.len()];
    for (k, &i) in supp.iter().enumerate() {
        out[i] = y[k];
    }
    Some((out, step))
}

pub(super) fn projective_map(x: &DVector<f64>, q: f64) -> DiagOuterMap {
    let slack = (1.0 - lq_mass(x, q)).max(0.0);
    DiagOuterMap { diag: x.map(|v| qpow(v.abs(), 2.0 - q) + slack), outer: x.clone(), scale: 1.0 }
}

pub(super) fn normal_generators(x: &DVector<f64>, q: f64) -> Vec<DVector<f64>> {
    if lq_mass(x, q) < 1.0 - ACTIVE_TOL {
        return vec![];
    }
    let n = x.len();
    let u = x.map(|v| if v.abs() <= ACTIVE_TOL { 0.0 } else { v.signum() * v.abs().powf(q - 1.0) });
    std::iter::once(u).chain((0..n).filter(|&i| x[i].abs() <= ACTIVE_TOL).map(|i| unit(n, i))).collect()
}
