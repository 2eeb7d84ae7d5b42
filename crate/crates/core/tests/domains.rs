mod common;

use bergman_core::domains::{cayley, Domain};
use bergman_core::points::{c, real_point};
use bergman_core::quadrature::ScrambledHalton;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn catalogue() -> Vec<Domain> {
    ["disc", "ball:2", "ball:3", "bidisc", "polydisc:3", "egg:2:4", "egg:2:6", "ellipsoid:1,2"]
        .iter()
        .map(|id| Domain::from_id(id).unwrap())
        .collect()
}

#[test]
fn membership_examples() {
    assert!(Domain::ball(2).membership(&real_point(&[0.0, 0.0])));
    assert!(!Domain::half_plane().membership(&[c(0.1, 0.0)]));
    assert!(!Domain::egg(2, 4).membership(&real_point(&[0.9, 0.7])));
    assert!(Domain::egg(2, 4).membership(&real_point(&[0.9, 0.6])));
}

#[test]
fn boundary_distance_examples() {
    assert!((Domain::ball(2).boundary_distance(&real_point(&[0.0, 0.0])).unwrap() - 1.0).abs() < 1e-14);
    assert!((Domain::polydisc(2).boundary_distance(&real_point(&[0.5, 0.0])).unwrap() - 0.5).abs() < 1e-14);
    assert!(Domain::disc().boundary_distance(&[c(1.5, 0.0)]).is_err());
}

#[test]
fn egg_boundary_distance_matches_brute_force() {
    let egg = Domain::egg(2, 4);
    let p = real_point(&[0.5, 0.5]);
    let d = egg.boundary_distance(&p).unwrap();
    // brute force: boundary of the egg over (|z1|, |z2|) parametrised by t = |z2|
    let (x0, y0) = (0.5f64, 0.5f64);
    let mut best = f64::INFINITY;
    let steps = 2_000_000;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let s = (1.0 - t.powi(4)).max(0.0).sqrt();
        best = best.min(((s - x0).powi(2) + (t - y0).powi(2)).sqrt());
    }
    assert!((d - best).abs() < 1e-8, "{d} vs {best}");
}

#[test]
fn quasi_random_members_lie_in_bounding_box() {
    for dom in catalogue() {
        let bbox = dom.bounding_box().unwrap();
        let big: Vec<(f64, f64)> = bbox.iter().map(|(l, h)| (l - 0.5 * (h - l), h + 0.5 * (h - l))).collect();
        let seq = ScrambledHalton::new(big.len(), Some(7));
        let mut x = vec![0.0; big.len()];
        let mut inside = 0;
        for i in 0..10_000u64 {
            seq.point(i, &mut x);
            let y: Vec<f64> = x.iter().zip(&big).map(|(u, (l, h))| l + u * (h - l)).collect();
            let z = bergman_core::points::from_real(&y);
            if dom.membership(&z) {
                inside += 1;
                assert!(y.iter().zip(&bbox).all(|(v, (l, h))| *l <= *v && *v <= *h), "{} {y:?}", dom.label());
            }
        }
        assert!(inside > 0);
    }
}

#[test]
fn boundary_distance_positive_iff_member() {
    for dom in catalogue() {
        for z in common::interior_points(&dom, 50, 0.0, 3) {
            assert!(dom.boundary_distance(&z).unwrap() > 0.0);
        }
        let bbox = dom.bounding_box().unwrap();
        let outside: Vec<f64> = bbox.iter().map(|(_, h)| h + 0.1).collect();
        assert!(dom.boundary_distance(&bergman_core::points::from_real(&outside)).is_err());
    }
}

#[test]
fn cayley_examples() {
    let hp = cayley(&Domain::half_plane()).unwrap();
    assert!(hp.forward(&[c(-1.0, 0.0)])[0].norm() < 1e-15);
    let sg = cayley(&Domain::siegel(2)).unwrap();
    let w = sg.forward(&real_point(&[-1.0, 0.0]));
    assert!(w.iter().all(|v| v.norm() < 1e-15));
    assert!(cayley(&Domain::disc()).unwrap().is_identity());
}

#[test]
fn cayley_round_trip_on_samples() {
    for dom in [Domain::half_plane(), Domain::siegel(2), Domain::siegel(3)] {
        let chart = cayley(&dom).unwrap();
        let target = chart.target().clone();
        let pts = common::interior_points(&target, 1000, 1e-3, 11);
        for w in pts {
            let z = chart.inverse(&w);
            assert!(dom.membership(&z));
            let back = chart.forward(&z);
            let err = bergman_core::points::dist(&back, &w);
            assert!(err < 1e-10, "{err}");
            assert!(chart.jacobian_det(&z).norm() > 0.0);
        }
    }
}

fn unit_box() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_distance_is_lipschitz(a in unit_box(), b in unit_box(), s in 0.0f64..1.0) {
        for dom in [Domain::ball(2), Domain::polydisc(2), Domain::egg(2, 4), Domain::ellipsoid(vec![1.0, 2.0])] {
            let za = bergman_core::points::from_real(&a);
            let zb: Vec<C64> = za.iter().zip(bergman_core::points::from_real(&b)).map(|(x, y)| x + (y - x) * s).collect();
            if dom.membership(&za) && dom.membership(&zb) {
                let da = dom.boundary_distance(&za).unwrap();
                let db = dom.boundary_distance(&zb).unwrap();
                prop_assert!((da - db).abs() <= bergman_core::points::dist(&za, &zb) + 1e-6);
            }
        }
    }

    #[test]
    fn membership_matches_defining_functions(x in unit_box()) {
        for dom in [Domain::ball(2), Domain::polydisc(2), Domain::egg(2, 4)] {
            let z = bergman_core::points::from_real(&x);
            let all_neg = dom.defining_values(&z).iter().all(|v| *v < 0.0);
            prop_assert_eq!(dom.membership(&z), all_neg);
        }
    }
}
