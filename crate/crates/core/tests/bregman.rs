use apfeas_core::bregman::{bregman_step, solve_bregman, BregmanKernel, EntropyKernel, FermiDiracKernel};
use apfeas_core::problems::{gen_qp_orthant, gen_toy_orthant_affine, AffineConstraints};
use apfeas_core::sets::ProjectiveMap;
use apfeas_core::{ApError, CatalogSet, ProjectiveSet, SetKind, SolverConfig, Status, TauRule};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(xs)
}

fn toy() -> AffineConstraints {
    AffineConstraints::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), v(&[1.0])).unwrap()
}

/// Bregman divergence `D(y, x)` from the kernel's own `phi` and gradient.
fn divergence(k: &dyn BregmanKernel, y: &DVector<f64>, x: &DVector<f64>) -> f64 {
    k.phi(y) - k.phi(x) - k.grad_phi(x).dot(&(y - x))
}

#[test]
fn entropy_step_closed_form() {
    let k = EntropyKernel { n: 2 };
    let x = v(&[2.0, 0.5]);
    let step = bregman_step(&toy(), &k, &x, TauRule::Min1).unwrap();
    assert!((step.report.multipliers[0] - 3.0 / 7.0).abs() < 1e-15);
    let want = x.map(|t| t * (-3.0f64 / 7.0).exp());
    assert!((step.point - want).amax() < 1e-12);
    assert!(!step.clamped);
}

#[test]
fn feasible_point_is_fixed() {
    let k = EntropyKernel { n: 2 };
    let x = v(&[0.25, 0.75]);
    let step = bregman_step(&toy(), &k, &x, TauRule::Min1).unwrap();
    assert_eq!(step.point, x);
}

#[test]
fn boundary_point_is_a_domain_violation() {
    let k = EntropyKernel { n: 2 };
    let err = bregman_step(&toy(), &k, &v(&[2.0, 0.0]), TauRule::Min1).unwrap_err();
    assert!(matches!(err, ApError::DomainViolation { .. }));
    let err = solve_bregman(&toy(), &k, &v(&[2.0, 0.0]), &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, ApError::DomainViolation { iteration: 0 }));
}

#[test]
fn entropy_w_equals_orthant_q() {
    let k = EntropyKernel { n: 6 };
    let set = CatalogSet::new(SetKind::Orthant { n: 6 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = DVector::from_fn(6, |_, _| rng.gen_range(0.0..3.0));
        let d = DVector::from_fn(6, |_, _| rng.sample(StandardNormal));
        let w = k.w_phi(&x).apply(&d);
        assert!((w - set.apply_q(&x, &d).unwrap()).amax() <= 1e-14);
    }
}

#[test]
fn fermi_dirac_w_equals_unit_box_q() {
    let k = FermiDiracKernel { n: 5 };
    let set = k.domain_set();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x = DVector::from_fn(5, |_, _| rng.gen_range(0.0..1.0));
        let d = DVector::from_fn(5, |_, _| rng.sample(StandardNormal));
        let w = k.w_phi(&x).apply(&d);
        assert!((w - set.apply_q(&x, &d).unwrap()).amax() <= 1e-14);
    }
}

#[test]
fn w_vanishes_on_normal_generators() {
    let kernels: [(Box<dyn BregmanKernel>, DVector<f64>); 2] = [
        (Box::new(EntropyKernel { n: 3 }), v(&[0.0, 1.5, 0.0])),
        (Box::new(FermiDiracKernel { n: 3 }), v(&[0.0, 0.4, 1.0])),
    ];
    for (k, x) in kernels {
        let gens = k.domain_set().normal_generators(&x).unwrap();
        assert_eq!(gens.len(), 2);
        for g in gens {
            assert_eq!(k.w_phi(&x).apply(&g).norm(), 0.0);
        }
    }
}

#[test]
fn w_is_inverse_hessian() {
    let h = 1e-5;
    let kernels: [(Box<dyn BregmanKernel>, DVector<f64>); 2] = [
        (Box::new(EntropyKernel { n: 3 }), v(&[0.3, 1.0, 2.5])),
        (Box::new(FermiDiracKernel { n: 3 }), v(&[0.1, 0.5, 0.85])),
    ];
    for (k, x) in kernels {
        let w = k.w_phi(&x);
        for i in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let hess = (k.phi(&xp) - 2.0 * k.phi(&x) + k.phi(&xm)) / (h * h);
            let rel = (w.diag[i] * hess - 1.0).abs();
            assert!(rel < 1e-4, "coordinate {i}: {rel:e}");
        }
    }
}

proptest! {
    #[test]
    fn mirror_maps_round_trip(xs in prop::collection::vec(1e-6f64..0.999_999, 1..8)) {
        let x = DVector::from_vec(xs);
        let fd = FermiDiracKernel { n: x.len() };
        let (back, clamped) = fd.inv_grad_phi(&fd.grad_phi(&x));
        prop_assert!(!clamped);
        prop_assert!((back - &x).amax() <= 1e-10);
        let ent = EntropyKernel { n: x.len() };
        let y = &x * 40.0;
        let (back, _) = ent.inv_grad_phi(&ent.grad_phi(&y));
        prop_assert!((back - &y).amax() <= 1e-10 * y.amax());
    }
}

/// The mirror update minimizes `<y - x, d> + D(y, x)`; check on a grid around the step.
#[test]
fn mirror_update_minimizes_linearized_divergence() {
    let cases: [(Box<dyn BregmanKernel>, DVector<f64>); 2] =
        [(Box::new(EntropyKernel { n: 2 }), v(&[2.0, 0.5])), (Box::new(FermiDiracKernel { n: 2 }), v(&[0.7, 0.6]))];
    for (k, x) in cases {
        let step = bregman_step(&toy(), k.as_ref(), &x, TauRule::Min1).unwrap();
        let d = &step.report.direction;
        let objective = |y: &DVector<f64>| (y - &x).dot(d) + divergence(k.as_ref(), y, &x);
        let (lo, hi) = match k.domain_set().kind() {
            SetKind::Orthant { .. } => (1e-3, 3.0),
            _ => (1e-3, 1.0 - 1e-3),
        };
        let steps = 400;
        let res = (hi - lo) / steps as f64;
        let mut best = (f64::INFINITY, x.clone());
        for i in 0..=steps {
            for j in 0..=steps {
                let y = v(&[lo + res * i as f64, lo + res * j as f64]);
                let f = objective(&y);
                if f < best.0 {
                    best = (f, y);
                }
            }
        }
        let gap = (&best.1 - &step.point).amax();
        assert!(gap <= res, "grid minimizer {:?} vs step {:?}", best.1, step.point);
        assert!(objective(&step.point) <= best.0 + 1e-12);
    }
}

#[test]
fn toy_bregman_converges_quadratically() {
    let k = EntropyKernel { n: 2 };
    let out = solve_bregman(&toy(), &k, &v(&[2.0, 0.5]), &SolverConfig::default()).unwrap();
    assert_eq!(out.status, Status::Converged);
    let r = out.trace.residuals();
    let ratios: Vec<f64> = r.windows(2).filter(|w| w[1] > 1e-13).map(|w| w[1] / (w[0] * w[0])).collect();
    assert!(ratios.len() >= 2);
    assert!(ratios.iter().all(|&c| c < 2.0), "{ratios:?}");
}

#[test]
fn qp_bregman_from_near_reference() {
    let inst = gen_qp_orthant(20, 2, 0).unwrap();
    let k = EntropyKernel { n: 20 };
    let x0 = inst.interior_start(1e-3);
    let out = solve_bregman(inst.system.as_ref(), &k, &x0, &SolverConfig::default()).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert!(out.iterations() <= 10, "{} iterations", out.iterations());
    assert_eq!(out.iterations(), 3);
    assert!(inst.system.eval(&out.x).norm() <= 1e-10);
}

#[test]
fn feasible_interior_start_takes_no_steps() {
    let inst = gen_toy_orthant_affine();
    let k = EntropyKernel { n: 2 };
    let x = v(&[0.5, 0.5]);
    let out = solve_bregman(inst.system.as_ref(), &k, &x, &SolverConfig::default()).unwrap();
    assert_eq!(out.iterations(), 0);
}
