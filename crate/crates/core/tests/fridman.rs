use bergman_core::domains::{AffineMap, Domain};
use bergman_core::fridman::{fridman_upper, localization_experiment, resample_soundness, FridmanOptions, Witness};
use bergman_core::kernel::{build_kernel, KernelModel, KernelOptions};
use bergman_core::points::{c, real_point};
use bergman_core::scaling::{build_scaling, Approach, ScalingClass};
use bergman_core::fridman::boundary_limit_experiment;

fn model(d: &Domain) -> KernelModel {
    build_kernel(d, &KernelOptions::default()).unwrap()
}

#[test]
fn ball_biholomorphs_are_certified_zero() {
    for (d, p) in [
        (Domain::ball(2), real_point(&[0.3, -0.4])),
        (Domain::ball(3), real_point(&[0.0, 0.0, 0.0])),
        (Domain::disc(), vec![c(0.7, 0.1)]),
        (Domain::siegel(2), real_point(&[-1.0, 0.2])),
    ] {
        let e = fridman_upper(&model(&d), &p, &FridmanOptions::default()).unwrap();
        assert_eq!(e.u, 0.0);
        assert!(e.radius.is_infinite());
        assert!(matches!(e.witness, Witness::BallChart(_)));
    }
}

#[test]
fn disc_limit_is_zero_on_every_rung() {
    let d = Domain::disc();
    let seq = build_scaling(&d, &[c(1.0, 0.0)], &Approach::Normal, ScalingClass::StronglyPseudoconvex, &[0.1, 0.01, 0.001]).unwrap();
    for row in boundary_limit_experiment(&seq, &model(&d), &FridmanOptions::default()) {
        assert_eq!(row.u(), Some(0.0));
    }
}

#[test]
fn bidisc_centre_bound_and_continuity() {
    let m = model(&Domain::polydisc(2));
    let opts = FridmanOptions::default();
    let e0 = fridman_upper(&m, &real_point(&[0.0, 0.0]), &opts).unwrap();
    assert!(e0.u > 0.0 && e0.u <= 0.6, "{}", e0.u);
    let sound = resample_soundness(&m, &e0, 4, &opts).unwrap();
    assert!(sound.passed, "{sound:?}");
    let e1 = fridman_upper(&m, &real_point(&[1e-3, 0.0]), &opts).unwrap();
    assert!((e0.u - e1.u).abs() < 5e-2, "{} vs {}", e0.u, e1.u);
}

#[test]
fn enlarging_the_family_or_grid_never_increases_u() {
    let m = model(&Domain::polydisc(2));
    let p = real_point(&[0.2, 0.1]);
    let base = FridmanOptions { positions: 9, radius_subdivisions: 4, ..FridmanOptions::default() };
    let u_base = fridman_upper(&m, &p, &base).unwrap().u;
    let more_family = FridmanOptions { positions: 17, ..base.clone() };
    let finer_grid = FridmanOptions { radius_subdivisions: 8, ..base.clone() };
    assert!(fridman_upper(&m, &p, &more_family).unwrap().u <= u_base);
    assert!(fridman_upper(&m, &p, &finer_grid).unwrap().u <= u_base);
}

#[test]
fn conformal_affine_images_give_the_same_estimate() {
    let egg = Domain::egg(2, 4);
    let base = model(&egg);
    let p = real_point(&[0.3, 0.2]);
    let opts = FridmanOptions::default();
    let u = fridman_upper(&base, &p, &opts).unwrap().u;
    let (ct, st) = (0.6, 0.8);
    let map = AffineMap::new(
        vec![c(2.0 * ct, 0.0), c(-2.0 * st, 0.0), c(2.0 * st, 0.0), c(2.0 * ct, 0.0)],
        vec![c(1.0, -0.5), c(0.25, 2.0)],
    );
    let image = Domain::affine_image(egg, map.clone(), 1.0);
    let moved = KernelModel::affine_pullback(image, &map, base);
    let v = fridman_upper(&moved, &map.apply(&p), &opts).unwrap().u;
    assert!((u - v).abs() < 1e-6 * u, "{u} vs {v}");
}

#[test]
fn whole_space_neighbourhood_changes_nothing() {
    let rows = localization_experiment(
        &Domain::ellipsoid(vec![1.0, 2.0]),
        &real_point(&[1.0, 0.0]),
        ScalingClass::StronglyPseudoconvex,
        &Approach::Normal,
        -1.0,
        &[0.1],
        &KernelOptions::default(),
        &FridmanOptions::default(),
    )
    .unwrap();
    assert_eq!(rows[0].u_full, rows[0].u_local);
    assert_eq!(rows[0].ratio, Some(1.0));
}
