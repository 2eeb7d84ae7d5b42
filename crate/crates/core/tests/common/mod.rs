#![allow(dead_code)]

use bergman_core::domains::Domain;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform rejection samples from the bounding box, kept at least `margin`
/// away from the boundary.
pub fn interior_points(domain: &Domain, count: usize, margin: f64, seed: u64) -> Vec<Vec<C64>> {
    let bbox = domain.bounding_box().expect("bounded domain");
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = bbox.iter().map(|(l, h)| r.random_range(*l..*h)).collect();
        let z: Vec<C64> = x.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        if domain.membership(&z) && domain.boundary_distance(&z).unwrap() >= margin {
            out.push(z);
        }
    }
    out
}

/// Disc points of modulus at most `rmax`.
pub fn disc_points(count: usize, rmax: f64, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| C64::from_polar(rmax * r.random::<f64>().sqrt(), r.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// `φ_a(z) = (a - z)/(1 - conj(a) z)`.
pub fn mobius(a: C64, z: C64) -> C64 {
    (a - z) / (1.0 - a.conj() * z)
}

pub fn mobius_derivative(a: C64, z: C64) -> C64 {
    let d = 1.0 - a.conj() * z;
    -(1.0 - a.norm_sqr()) / (d * d)
}

pub fn disc_distance(z: C64, w: C64) -> f64 {
    2f64.sqrt() * mobius(z, w).norm().atanh()
}
