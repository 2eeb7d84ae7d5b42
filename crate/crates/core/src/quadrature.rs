//! Deterministic sampling and one-dimensional quadrature.
//!
//! Scrambled Halton points drive the box-rejection volume quadrature used to
//! cross-check moments; the same generator (unscrambled) gives the
//! quasi-uniform direction grids on spheres. Tanh-sinh handles the
//! endpoint-singular moment integrals of the shell neighbourhoods.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton sequence with per-dimension, per-digit random digit permutations.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    dim: usize,
    perms: Vec<Vec<Vec<u32>>>,
    digits: Vec<usize>,
}

impl ScrambledHalton {
    /// `seed = None` gives the plain (unscrambled) sequence.
    pub fn new(dim: usize, seed: Option<u64>) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension capped at {}", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        let mut perms = Vec::with_capacity(dim);
        let mut digits = Vec::with_capacity(dim);
        for &b in &PRIMES[..dim] {
            let nd = (53.0 * std::f64::consts::LN_2 / (b as f64).ln()).ceil() as usize;
            digits.push(nd);
            let mut per_digit = Vec::with_capacity(nd);
            for _ in 0..nd {
                let mut p: Vec<u32> = (0..b).collect();
                if seed.is_some() {
                    p.shuffle(&mut rng);
                }
                per_digit.push(p);
            }
            perms.push(per_digit);
        }
        Self { dim, perms, digits }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point with index `i` (0-based) written into `out`, coordinates in [0,1).
    pub fn point(&self, i: u64, out: &mut [f64]) {
        for d in 0..self.dim {
            let b = PRIMES[d] as u64;
            let inv = 1.0 / b as f64;
            let mut n = i + 1;
            let mut f = inv;
            let mut x = 0.0;
            for k in 0..self.digits[d] {
                let digit = (n % b) as usize;
                n /= b;
                x += self.perms[d][k][digit] as f64 * f;
                f *= inv;
                if n == 0 && self.perms[d][k + 1..].iter().all(|p| p[0] == 0) {
                    break;
                }
            }
            out[d] = x.min(1.0 - f64::EPSILON);
        }
    }
}

/// Quasi-uniform unit vectors on the sphere `S^{dim-1}` in `R^dim`.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1 && count >= 1);
    if dim == 1 {
        return (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    }
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let seq = ScrambledHalton::new(dim, None);
    let mut u = vec![0.0; dim];
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        seq.point(i, &mut u);
        i += 1;
        let v: Vec<f64> = u.iter().map(|&p| normal.inverse_cdf(p.clamp(1e-12, 1.0 - 1e-12))).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Tanh-sinh quadrature of `f` on `[a, b]`, refined until successive levels
/// agree to `rel_tol`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    // abscissa offsets measured from the nearer endpoint avoid cancellation
    let eval = |t: f64| -> f64 {
        let s = pi2 * t.sinh();
        let cosh_s = s.cosh();
        let w = pi2 * t.cosh() / (cosh_s * cosh_s);
        // 1 - tanh(s) = 2 / (1 + e^{2s})
        let comp = 2.0 / (1.0 + (2.0 * s.abs()).exp());
        let x = if s >= 0.0 { b - half * comp } else { a + half * comp };
        if x <= a || x >= b {
            return 0.0;
        }
        f(x) * w * half
    };
    let tmax = 3.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > tmax {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _level in 0..10 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > tmax {
                break;
            }
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_lie_in_unit_cube_and_fill_it() {
        let h = ScrambledHalton::new(4, Some(11));
        let mut p = [0.0; 4];
        let mut mean = [0.0; 4];
        let n = 4096;
        for i in 0..n {
            h.point(i, &mut p);
            for d in 0..4 {
                assert!((0.0..1.0).contains(&p[d]));
                mean[d] += p[d] / n as f64;
            }
        }
        for m in mean {
            assert!((m - 0.5).abs() < 5e-3);
        }
    }

    #[test]
    fn scrambling_is_seed_deterministic() {
        let a = ScrambledHalton::new(3, Some(5));
        let b = ScrambledHalton::new(3, Some(5));
        let (mut x, mut y) = ([0.0; 3], [0.0; 3]);
        for i in [0u64, 17, 999] {
            a.point(i, &mut x);
            b.point(i, &mut y);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn sphere_directions_are_unit() {
        for dim in 2..=6 {
            for v in sphere_directions(dim, 50) {
                let n: f64 = v.iter().map(|x| x * x).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // ∫_0^1 s^3 (1-s)^{1/2} ds = B(4, 3/2)
        let exact = statrs::function::beta::beta(4.0, 1.5);
        let got = tanh_sinh(|s| s.powi(3) * (1.0 - s).sqrt(), 0.0, 1.0, 1e-14);
        assert!((got - exact).abs() < 1e-13 * exact);
        let peaked = tanh_sinh(|s| s.powi(200) * (1.0 - s).powf(2.5), 0.0, 1.0, 1e-13);
        let exact = statrs::function::beta::beta(201.0, 3.5);
        assert!((peaked - exact).abs() < 1e-9 * exact, "{peaked} vs {exact}");
    }
}
