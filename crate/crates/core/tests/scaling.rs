mod common;

use bergman_core::domains::{AffineMap, Domain};
use bergman_core::kernel::{build_kernel, KernelOptions};
use bergman_core::points::{c, dist, real_point};
use bergman_core::scaling::{
    build_scaling, default_window, ScalingSequence, hausdorff_gap, verify_chain, Approach, ChainOptions, Quantity, ScalingClass,
    DEFAULT_DELTAS,
};
use num_complex::Complex64 as C64;

fn disc_seq() -> bergman_core::scaling::ScalingSequence {
    build_scaling(&Domain::disc(), &[c(1.0, 0.0)], &Approach::Normal, ScalingClass::StronglyPseudoconvex, &DEFAULT_DELTAS)
        .unwrap()
}

fn ellipsoid_seq() -> bergman_core::scaling::ScalingSequence {
    build_scaling(
        &Domain::ellipsoid(vec![1.0, 2.0]),
        &real_point(&[1.0, 0.0]),
        &Approach::Normal,
        ScalingClass::StronglyPseudoconvex,
        &DEFAULT_DELTAS,
    )
    .unwrap()
}

fn test_points() -> Vec<Vec<C64>> {
    vec![vec![c(-2.0, 0.0)], vec![c(-1.0, 0.0)], vec![c(-0.5, 0.0)]]
}

#[test]
fn disc_scaling_matches_substitution() {
    let seq = disc_seq();
    assert!(seq.limit.membership(&[c(-0.1, 5.0)]));
    assert!(!seq.limit.membership(&[c(0.1, 0.0)]));
    let pts = common::disc_points(200, 3.0, 3);
    for j in 0..seq.len() {
        let d = seq.deltas[j];
        assert!((seq.transported[j][0] - c(-1.0, 0.0)).norm() < 1e-12);
        for w in &pts {
            let w = w - 1.5;
            let expect = 2.0 * w.re + d * w.norm_sqr() < 0.0;
            assert_eq!(seq.scaled[j].membership(&[w]), expect, "j={j} w={w}");
        }
    }
}

#[test]
fn egg_levi_scaling_limit_and_weights() {
    let seq = build_scaling(
        &Domain::egg(2, 4),
        &real_point(&[1.0, 0.0]),
        &Approach::default_cone(),
        ScalingClass::LeviCorankOne,
        &DEFAULT_DELTAS,
    )
    .unwrap();
    assert_eq!(seq.weights, vec![1.0, 0.25]);
    let mut r = common::rng(8);
    use rand::Rng;
    for _ in 0..500 {
        let z = vec![c(r.random_range(-3.0..1.0), r.random_range(-2.0..2.0)), c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0))];
        let expect = 2.0 * z[0].re + z[1].norm_sqr().powi(2) < 0.0;
        assert_eq!(seq.limit.membership(&z), expect, "{z:?}");
    }
}

#[test]
fn strongly_pseudoconvex_weights() {
    let seq = ellipsoid_seq();
    assert_eq!(seq.weights, vec![1.0, 0.5]);
    let siegel = Domain::siegel(2);
    for z in common::interior_points(&Domain::ball(2), 200, 0.0, 4) {
        let w = vec![z[0] * 3.0 - 2.0, z[1] * 2.0];
        assert_eq!(seq.limit.membership(&w), siegel.membership(&w), "{w:?}");
    }
}

#[test]
fn scaling_maps_are_bijections() {
    for seq in [disc_seq(), ellipsoid_seq()] {
        let n = seq.source.dim();
        let pts = common::interior_points(&Domain::polydisc(n), 1000, 0.0, 17);
        for j in 0..seq.len() {
            for z in &pts {
                let back = seq.inverse(j, &seq.forward(j, z));
                assert!(dist(&back, z) < 1e-12);
            }
        }
    }
}

#[test]
fn transformation_rule_on_scaled_kernels() {
    for seq in [disc_seq(), ellipsoid_seq()] {
        let base = build_kernel(&seq.source, &KernelOptions::default()).unwrap();
        for j in 0..seq.len() {
            let scaled = seq.scaled_kernel(j, &base);
            let det = seq.maps[j].det().norm_sqr();
            let lhs = scaled.diagonal(&seq.transported[j]);
            let rhs = base.diagonal(&seq.points[j]) / det;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}

#[test]
fn hausdorff_examples() {
    let w = vec![(-3.0, 0.0), (-2.0, 2.0)];
    let hp = Domain::half_plane();
    assert_eq!(hausdorff_gap(&hp, &hp, &w, 200), 0.0);
    assert_eq!(hausdorff_gap(&Domain::disc(), &Domain::ball(1), &[(-1.5, 1.5), (-1.5, 1.5)], 100), 0.0);
    let seq = disc_seq();
    let g: Vec<f64> = (0..seq.len()).map(|j| hausdorff_gap(&seq.scaled[j], &seq.limit, &w, 400)).collect();
    assert!(g[0] > 0.0);
    // linear in δ up to grid resolution
    for j in 1..g.len() {
        let ratio = (g[j] / g[0]) / (seq.deltas[j] / seq.deltas[0]);
        assert!(g[j] < 2e-2 || (0.5..2.0).contains(&ratio), "{g:?}");
    }
}

#[test]
fn hausdorff_gaps_shrink_down_the_ladder() {
    for seq in [disc_seq(), ellipsoid_seq()] {
        let win = default_window(seq.source.dim());
        let per_axis = if seq.source.dim() == 1 { 200 } else { 24 };
        let g: Vec<f64> = (0..seq.len()).map(|j| hausdorff_gap(&seq.scaled[j], &seq.limit, &win, per_axis)).collect();
        for w in g.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "{g:?}");
        }
    }
}

#[test]
fn disc_chain_distance_gap_shrinks_fivefold() {
    let seq = disc_seq();
    let base = build_kernel(&seq.source, &KernelOptions::default()).unwrap();
    let reports = verify_chain(&seq, &base, &test_points(), &[Quantity::Kernel, Quantity::Distance], &ChainOptions::default()).unwrap();
    for r in &reports {
        let gaps: Vec<f64> = r.rows.iter().map(|row| row.gap.unwrap()).collect();
        eprintln!("{:?} {gaps:?}", r.quantity);
        assert!(r.decreasing);
        assert!(!r.cauchy);
        let last = *gaps.last().unwrap();
        // saturation: the last rung stays within a factor 10 of the linear prediction from the previous one
        let predicted = gaps[gaps.len() - 2] * seq.deltas[seq.len() - 1] / seq.deltas[seq.len() - 2];
        assert!(last < 10.0 * predicted);
        if r.quantity == Quantity::Distance {
            assert!(gaps[0] >= 5.0 * last);
        }
    }
}

#[test]
fn identical_sequence_has_zero_gaps() {
    // the half-plane is invariant under the normal dilations
    let hp = Domain::half_plane();
    let deltas = vec![0.1, 0.01];
    let seq = ScalingSequence {
        source: hp.clone(),
        p0: vec![c(0.0, 0.0)],
        approach: Approach::Normal,
        class: ScalingClass::StronglyPseudoconvex,
        weights: vec![1.0],
        deltas: deltas.clone(),
        points: deltas.iter().map(|d| vec![c(-d, 0.0)]).collect(),
        maps: deltas.iter().map(|d| AffineMap::diagonal_about(&[c(0.0, 0.0)], &[c(1.0 / d, 0.0)])).collect(),
        scaled: vec![hp.clone(), hp.clone()],
        limit: hp,
        transported: vec![vec![c(-1.0, 0.0)]; 2],
    };
    let base = build_kernel(&seq.source, &KernelOptions::default()).unwrap();
    let reports = verify_chain(&seq, &base, &test_points(), &[Quantity::Kernel, Quantity::Metric, Quantity::Distance], &ChainOptions::default())
        .unwrap();
    for r in &reports {
        for row in &r.rows {
            assert!(row.gap.unwrap() < 1e-9, "{:?} {:?}", r.quantity, row);
        }
    }
}
