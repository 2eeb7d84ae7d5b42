mod common;

use bergman_core::domains::Domain;
use bergman_core::geodesics::DistanceOptions;
use bergman_core::kernel::{build_kernel, KernelModel, KernelOptions};
use bergman_core::metric::{christoffel, hahn_lu_check, metric_length, metric_tensor, realify};
use bergman_core::points::{c, from_real, real_point, to_real};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn model(id: &str) -> KernelModel {
    build_kernel(&Domain::from_id(id).unwrap(), &KernelOptions::default()).unwrap()
}

/// Second-order central differences of `log K(z,z)`.
fn fd_metric(m: &KernelModel, z: &[C64], h: f64) -> DMatrix<C64> {
    let n = z.len();
    let x0 = to_real(z);
    let f = |d: &[(usize, f64)]| {
        let mut x = x0.clone();
        for &(i, s) in d {
            x[i] += s;
        }
        m.diagonal(&from_real(&x)).ln()
    };
    let second = |i: usize, j: usize| {
        (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)]) + f(&[(i, -h), (j, -h)])) / (4.0 * h * h)
    };
    DMatrix::from_fn(n, n, |mu, nu| {
        let (xm, ym, xn, yn) = (2 * mu, 2 * mu + 1, 2 * nu, 2 * nu + 1);
        C64::new(second(xm, xn) + second(ym, yn), second(xm, yn) - second(ym, xn)) / 4.0
    })
}

#[test]
fn tensor_examples() {
    let g = metric_tensor(&model("disc"), &[c(0.0, 0.0)]).unwrap().g;
    assert!((g[(0, 0)].re - 2.0).abs() < 1e-13);
    let g = metric_tensor(&model("ball:2"), &real_point(&[0.0, 0.0])).unwrap().g;
    assert!((g - DMatrix::identity(2, 2).map(|v: f64| C64::new(3.0 * v, 0.0))).norm() < 1e-12);
    let g = metric_tensor(&model("halfplane"), &[c(-1.0, 0.0)]).unwrap().g;
    assert!((g[(0, 0)].re - 0.5).abs() < 1e-12);
}

#[test]
fn length_examples() {
    assert!((metric_length(&model("disc"), &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap() - 2f64.sqrt()).abs() < 1e-13);
    assert_eq!(metric_length(&model("egg:2:4"), &real_point(&[0.1, 0.2]), &real_point(&[0.0, 0.0])).unwrap(), 0.0);
    let l = metric_length(&model("bidisc"), &real_point(&[0.0, 0.0]), &real_point(&[1.0, 1.0])).unwrap();
    assert!((l - 2.0).abs() < 1e-13);
}

#[test]
fn christoffel_vanishes_at_symmetric_centres() {
    for (id, n) in [("disc", 1), ("ball:2", 2)] {
        let s = christoffel(&model(id), &vec![0.0; 2 * n]).unwrap();
        assert!(s.christoffel.unwrap().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn disc_christoffel_matches_finite_differences() {
    let gt = |x: &[f64]| 2.0 / (1.0 - x[0] * x[0] - x[1] * x[1]).powi(2);
    let x = [0.5, 0.0];
    let h = 1e-5;
    let dg = |k: usize| {
        let (mut p, mut m) = (x, x);
        p[k] += h;
        m[k] -= h;
        (gt(&p) - gt(&m)) / (2.0 * h)
    };
    let g = gt(&x);
    let s = christoffel(&model("disc"), &x).unwrap();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for eta in 0..2 {
        for mu in 0..2 {
            for nu in 0..2 {
                let oracle = 0.5 / g * (dg(mu) * delta(eta, nu) + dg(nu) * delta(eta, mu) - dg(eta) * delta(mu, nu));
                let got = s.gamma(eta, mu, nu).unwrap();
                assert!((got - oracle).abs() < 1e-6, "{eta}{mu}{nu}: {got} vs {oracle}");
            }
        }
    }
    assert!(s.christoffel.unwrap().iter().any(|v| v.abs() > 0.1));
}

#[test]
fn analytic_metric_matches_finite_differences() {
    for id in ["egg:2:4", "ellipsoid:1,2", "bidisc"] {
        let m = model(id);
        for z in common::interior_points(m.domain(), 100, 0.1, 31) {
            let an = metric_tensor(&m, &z).unwrap().g;
            let fd = fd_metric(&m, &z, 1e-4);
            assert!((&an - &fd).norm() < 1e-5 * an.norm(), "{id} {z:?}");
        }
    }
}

#[test]
fn christoffel_symmetric_in_lower_indices() {
    let m = model("egg:2:4");
    for z in common::interior_points(m.domain(), 20, 0.1, 5) {
        let s = christoffel(&m, &to_real(&z)).unwrap();
        for eta in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    assert!((s.gamma(eta, mu, nu).unwrap() - s.gamma(eta, nu, mu).unwrap()).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn hahn_lu_examples() {
    let opts = DistanceOptions::default();
    let r = hahn_lu_check(&model("disc"), &[(vec![c(0.0, 0.0)], vec![c(0.5, 0.0)])], &opts).unwrap();
    assert!((r[0].caratheodory - 0.5f64.atanh()).abs() < 1e-12);
    assert!((r[0].bergman - 2f64.sqrt() * 0.5f64.atanh()).abs() < 1e-4);
    assert!(r[0].margin > 0.0);
    let z = vec![c(0.2, 0.1)];
    let r = hahn_lu_check(&model("disc"), &[(z.clone(), z)], &opts).unwrap();
    assert_eq!(r[0].margin, 0.0);
    let r = hahn_lu_check(&model("bidisc"), &[(real_point(&[0.0, 0.0]), real_point(&[0.5, 0.0]))], &opts).unwrap();
    assert!((r[0].margin - (2f64.sqrt() - 1.0) * 0.5f64.atanh()).abs() < 1e-4);
}

fn disc_point() -> impl Strategy<Value = C64> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn realification_preserves_quadratic_form(
        x in prop::collection::vec(-0.6f64..0.6, 4),
        xi in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let m = model("egg:2:4");
        let z = from_real(&x);
        prop_assume!(m.domain().membership(&z));
        let s = metric_tensor(&m, &z).unwrap();
        let v = from_real(&xi);
        let mut q = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                q += s.g[(a, b)] * v[a] * v[b].conj();
            }
        }
        let y = nalgebra::DVector::from_vec(xi.clone());
        let qr = (y.transpose() * realify(&s.g) * &y)[0];
        prop_assert!((q.re - qr).abs() <= 1e-10 * q.re.abs().max(1.0));
        prop_assert!(q.im.abs() <= 1e-10 * q.re.abs().max(1.0));
        let sym = (&s.g_real - s.g_real.transpose()).norm();
        prop_assert!(sym <= 1e-12 * s.g_real.norm());
        prop_assert!(s.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn length_invariant_under_disc_automorphisms(a in disc_point(), z in disc_point(), xi in disc_point()) {
        let m = model("disc");
        let lhs = metric_length(&m, &[z], &[xi]).unwrap();
        let rhs = metric_length(&m, &[common::mobius(a, z)], &[common::mobius_derivative(a, z) * xi]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0));
    }
}
