//! Conversions between complex points of `C^n` and real points of `R^{2n}`
//! using interleaved coordinates `z_k = x_{2k} + i x_{2k+1}`.

use crate::jet::C64;

pub fn to_real(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn from_real(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn norm(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Hermitian inner product `<z, w> = Σ z_k conj(w_k)`.
pub fn hdot(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_point(values: &[f64]) -> Vec<C64> {
    values.iter().map(|&v| C64::new(v, 0.0)).collect()
}
