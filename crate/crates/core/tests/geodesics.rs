mod common;

use bergman_core::domains::Domain;
use bergman_core::geodesics::{
    bergman_ball, bergman_distance, integrate_geodesic, real_speed_sq, DistanceMethod, DistanceOptions, DistanceStrategy,
    GeodesicOptions,
};
use bergman_core::kernel::{build_kernel, KernelModel, KernelOptions};
use bergman_core::points::{c, norm, real_point};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn model(id: &str) -> KernelModel {
    build_kernel(&Domain::from_id(id).unwrap(), &KernelOptions::default()).unwrap()
}

fn d05() -> f64 {
    2f64.sqrt() * 0.5f64.atanh()
}

#[test]
fn radial_and_symmetric_paths() {
    let path = integrate_geodesic(&model("disc"), &[c(0.0, 0.0)], &[c(1.0, 0.0)], d05(), &GeodesicOptions::default()).unwrap();
    assert!((path.endpoint[0] - 0.5).abs() < 1e-6);
    let hp = integrate_geodesic(&model("halfplane"), &[c(-1.0, 0.0)], &[c(1.0, 0.0)], 1.0, &GeodesicOptions::default()).unwrap();
    assert!(hp.samples.iter().all(|s| s.x[1].abs() < 1e-12));
    assert!(hp.endpoint[0] < 0.0);
}

#[test]
fn ball_geodesics_follow_the_slice_prediction() {
    let ball = model("ball:2");
    let l = 1.2;
    let expect = (l / 3f64.sqrt()).tanh();
    for v in [real_point(&[1.0, 0.0]), vec![c(0.3, -0.2), c(0.1, 0.9)], vec![c(0.0, 1.0), c(0.0, 1.0)]] {
        let p = integrate_geodesic(&ball, &real_point(&[0.0, 0.0]), &v, l, &GeodesicOptions::default()).unwrap();
        let r = bergman_core::points::real_norm(&p.endpoint);
        assert!((r - expect).abs() < 1e-6, "{r} vs {expect}");
    }
}

#[test]
fn speed_is_conserved() {
    for (id, z, v) in [
        ("disc", vec![c(0.3, -0.1)], vec![c(0.2, 1.0)]),
        ("egg:2:4", real_point(&[0.2, 0.3]), vec![c(1.0, 0.5), c(-0.3, 0.2)]),
        ("bidisc", real_point(&[0.1, -0.2]), vec![c(0.4, 0.1), c(1.0, 0.0)]),
    ] {
        let m = model(id);
        let p = integrate_geodesic(&m, &z, &v, 1.5, &GeodesicOptions::default()).unwrap();
        assert!((p.length - 1.5).abs() < 1e-9);
        for s in &p.samples {
            let sp = real_speed_sq(&m, &s.x, &s.y).unwrap().sqrt();
            assert!((sp - 1.0).abs() < 1e-6 * 1.5, "{id}: speed {sp} at s={}", s.s);
        }
    }
}

#[test]
fn distance_examples() {
    let opts = DistanceOptions::default();
    let r = bergman_distance(&model("disc"), &[c(0.0, 0.0)], &[c(0.5, 0.0)], &opts).unwrap();
    assert!((r.distance - 2f64.sqrt() * 0.5f64.atanh()).abs() < 1e-4);
    assert!((r.distance - d05()).abs() < 1e-6);
    let z = real_point(&[0.2, -0.1]);
    let r = bergman_distance(&model("egg:2:4"), &z, &z, &opts).unwrap();
    assert_eq!((r.distance, r.method), (0.0, DistanceMethod::Coincident));
    let r = bergman_distance(&model("bidisc"), &real_point(&[0.0, 0.0]), &real_point(&[0.5, 0.0]), &opts).unwrap();
    assert!((r.distance - d05()).abs() < 1e-4);
}

#[test]
fn shooting_and_energy_agree() {
    let opts = DistanceOptions { strategy: DistanceStrategy::Both, ..DistanceOptions::default() };
    let disc = model("disc");
    let zs = common::disc_points(25, 0.7, 41);
    let ws = common::disc_points(25, 0.7, 42);
    for (z, w) in zs.iter().zip(&ws) {
        let r = bergman_distance(&disc, &[*z], &[*w], &opts).unwrap();
        assert!((r.shooting.unwrap() - r.energy.unwrap()).abs() < 5e-4, "{r:?}");
    }
    let bidisc = model("bidisc");
    let pts = common::interior_points(bidisc.domain(), 50, 0.3, 43);
    for pair in pts.chunks(2) {
        let r = bergman_distance(&bidisc, &pair[0], &pair[1], &opts).unwrap();
        assert!((r.shooting.unwrap() - r.energy.unwrap()).abs() < 5e-4, "{r:?}");
    }
}

#[test]
fn triangle_inequality_on_disc_triples() {
    let disc = model("disc");
    let opts = DistanceOptions::default();
    let pts = common::disc_points(300, 0.8, 51);
    for t in pts.chunks(3) {
        let d = |a: C64, b: C64| bergman_distance(&disc, &[a], &[b], &opts).unwrap().distance;
        let slack = d(t[0], t[1]) + d(t[1], t[2]) - d(t[0], t[2]);
        assert!(slack >= -1e-4, "{slack}");
    }
}

#[test]
fn distance_invariant_under_disc_automorphisms() {
    let disc = model("disc");
    let opts = DistanceOptions::default();
    let a = c(0.3, -0.4);
    for (z, w) in common::disc_points(20, 0.6, 61).into_iter().zip(common::disc_points(20, 0.6, 62)) {
        let d1 = bergman_distance(&disc, &[z], &[w], &opts).unwrap().distance;
        let (pz, pw) = (common::mobius(a, z), common::mobius(a, w));
        let d2 = bergman_distance(&disc, &[pz], &[pw], &opts).unwrap().distance;
        assert!((d1 - d2).abs() < 1e-4, "{d1} vs {d2}");
    }
}

#[test]
fn ball_samples_match_predictions() {
    let disc = model("disc");
    let s = bergman_ball(&disc, &[c(0.0, 0.0)], d05(), Some(32), &GeodesicOptions::default()).unwrap();
    assert_eq!(s.flagged(), 0);
    for e in s.endpoints.iter().flatten() {
        assert!((norm(e) - 0.5).abs() < 1e-6);
    }
    let p = [c(0.2, 0.1)];
    let tiny = bergman_ball(&disc, &p, 1e-4, Some(16), &GeodesicOptions::default()).unwrap();
    for e in tiny.endpoints.iter().flatten() {
        assert!(bergman_core::points::dist(e, &p) < 1e-4);
    }
    let ball = model("ball:2");
    let s = bergman_ball(&ball, &real_point(&[0.0, 0.0]), 1.0, Some(64), &GeodesicOptions::default()).unwrap();
    let expect = (1.0 / 3f64.sqrt()).tanh();
    for e in s.endpoints.iter().flatten() {
        assert!((norm(e) - expect).abs() < 1e-6);
    }
}

#[test]
fn smaller_spheres_nest_inside_larger_balls() {
    let egg = model("egg:2:4");
    let p = real_point(&[0.1, 0.1]);
    let opts = DistanceOptions::default();
    let (r1, r2) = (0.4, 0.6);
    let s = bergman_ball(&egg, &p, r1, Some(24), &GeodesicOptions::default()).unwrap();
    for e in s.endpoints.iter().flatten() {
        let d = bergman_distance(&egg, &p, e, &opts).unwrap().distance;
        assert!(d < r2, "{d}");
        assert!((d - r1).abs() < 1e-3, "{d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn disc_shooting_matches_closed_form(
        (r1, t1) in (0.0f64..0.85, 0.0f64..6.28),
        (r2, t2) in (0.0f64..0.85, 0.0f64..6.28),
    ) {
        let (z, w) = (C64::from_polar(r1, t1), C64::from_polar(r2, t2));
        let exact = common::disc_distance(z, w);
        prop_assume!(exact <= 3.0);
        let r = bergman_distance(&model("disc"), &[z], &[w], &DistanceOptions::default()).unwrap();
        prop_assert!((r.distance - exact).abs() < 1e-4);
    }
}
