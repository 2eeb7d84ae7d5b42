//! Kernel of `{|z_1| > a} ∩ D` for a Reinhardt domain
//! `D = {|z_1|^2 + a_2 |z_2|^{2m} < 1}` in `C^2`.
//!
//! The intersection is Reinhardt but not complete, so its orthogonal basis
//! consists of the Laurent monomials `z_1^k z_2^b`, `k ∈ Z`, `b ≥ 0`. The
//! kernel is written as `K_D` plus a correction series
//!
//! `Σ_{k≥0,b} x^k y^b (1/M_U - 1/M_D) + Σ_{k<0,b} x^k y^b / M_U`.

use super::profile::{falling, substitute, Profile};
use crate::jet::{factorial, table, Jet, C64};
use crate::quadrature::tanh_sinh;
use statrs::function::beta::{beta_reg, ln_beta};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct ShellProfile {
    base: Profile,
    inner_radius: f64,
    /// `pos[k][b] = 1/M_U(k,b) - 1/M_D(k,b)`, `k ≥ 0`.
    pos: Vec<Vec<f64>>,
    /// `neg[j-1][b] = 1/M_U(-j,b)`, `j ≥ 1`.
    neg: Vec<Vec<f64>>,
}

const REL_TOL: f64 = 1e-17;

impl ShellProfile {
    /// `base` must be the closed-form profile of `D`; `a2` and `m` describe the
    /// second coordinate. Tables cover `|k| ≤ kmax`, `b ≤ bmax`.
    pub fn new(base: Profile, a2: f64, m: u32, inner_radius: f64, kmax: usize, bmax: usize) -> Self {
        assert!(inner_radius > 0.0 && inner_radius < 1.0);
        let big_a = inner_radius * inner_radius;
        let mf = m as f64;
        let pref = |b: usize, c: f64| PI * PI / ((b as f64 + 1.0) * a2.powf(c));
        let pos = (0..=kmax)
            .map(|k| {
                (0..=bmax)
                    .map(|b| {
                        let c = (b as f64 + 1.0) / mf;
                        let (p, q) = (k as f64 + 1.0, c + 1.0);
                        let lower = beta_reg(p, q, big_a);
                        let upper = beta_reg(q, p, 1.0 - big_a);
                        // (1/M_U - 1/M_D) = I_A / (P B (1 - I_A))
                        let ln_pb = pref(b, c).ln() + ln_beta(p, q);
                        if lower == 0.0 {
                            0.0
                        } else {
                            (lower.ln() - upper.ln() - ln_pb).exp()
                        }
                    })
                    .collect()
            })
            .collect();
        let neg = (1..=kmax)
            .map(|j| {
                (0..=bmax)
                    .map(|b| {
                        let c = (b as f64 + 1.0) / mf;
                        // substitute s = A e^u to tame the s^{-j} peak at the inner edge
                        let span = -big_a.ln();
                        let jf = j as f64;
                        let integral = tanh_sinh(
                            |u| ((1.0 - jf) * u).exp() * (1.0 - big_a * u.exp()).max(0.0).powf(c),
                            0.0,
                            span,
                            1e-13,
                        );
                        let ln_mu = pref(b, c).ln() + (1.0 - jf) * big_a.ln() + integral.ln();
                        (-ln_mu).exp()
                    })
                    .collect()
            })
            .collect();
        Self { base, inner_radius, pos, neg }
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn value(&self, x: &[C64]) -> C64 {
        let base = self.base.value(x);
        base + self.correction_taylor(x, base.norm())[0]
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        let x0 = [x[0].value(), x[1].value()];
        let base = self.base.jet(x);
        base + substitute(&self.correction_taylor(&x0, base.value().norm()), x)
    }

    /// True when the tables are long enough to resolve the series at `x`.
    pub fn resolves(&self, x: &[C64]) -> bool {
        let (xa, ya) = (x[0].norm(), x[1].norm());
        let a = self.inner_radius * self.inner_radius;
        let kmax = self.neg.len() as i32;
        let bmax = self.pos[0].len() as i32 - 1;
        let neg_ok = (a / xa).powi(kmax) * (kmax as f64).powi(3) < 1e-15;
        let b_ratio = ya / (1.0 - a).max(1e-300);
        let b_ok = b_ratio < 1.0 && b_ratio.powi(bmax) * (bmax as f64).powi(4) < 1e-15;
        neg_ok && b_ok
    }

    fn correction_taylor(&self, x0: &[C64], scale: f64) -> Vec<C64> {
        let tab = table(2);
        let mut out = vec![C64::new(0.0, 0.0); tab.len()];
        let (x, y) = (x0[0], x0[1]);
        let bmax = self.pos[0].len();
        let mut ypow = Vec::with_capacity(bmax);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..bmax {
            ypow.push(p);
            p *= y;
        }
        let tol = REL_TOL * scale.max(f64::MIN_POSITIVE);
        let mut accumulate = |k: i32, row: &[f64], xk_minus: &dyn Fn(i32) -> C64| -> f64 {
            let mut row_mag = 0.0f64;
            for (b, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let weight = c * ((k.unsigned_abs() + 1) as f64).powi(3) * ((b + 1) as f64).powi(3);
                let mag = weight * ypow[b].norm() * xk_minus(0).norm();
                row_mag = row_mag.max(mag);
                if b > 3 && mag < tol {
                    break;
                }
                for (slot, beta) in out.iter_mut().zip(&tab.exps) {
                    let (b0, b1) = (beta[0] as i32, beta[1] as i32);
                    if b1 > b as i32 {
                        continue;
                    }
                    let fx = falling(k, b0) / factorial(b0 as usize);
                    if fx == 0.0 {
                        continue;
                    }
                    let fy = falling(b as i32, b1) / factorial(b1 as usize);
                    *slot += xk_minus(b0) * ypow[b - b1 as usize] * (c * fx * fy);
                }
            }
            row_mag
        };
        let mut quiet = 0;
        let mut xk = C64::new(1.0, 0.0);
        let xinv = x.inv();
        for (k, row) in self.pos.iter().enumerate() {
            let base = xk;
            let f = |d: i32| if d == 0 { base } else { base * xinv.powi(d) };
            let mag = accumulate(k as i32, row, &f);
            xk *= x;
            quiet = if mag < tol { quiet + 1 } else { 0 };
            if k > 3 && quiet >= 3 {
                break;
            }
        }
        quiet = 0;
        let mut xk = xinv;
        for (j, row) in self.neg.iter().enumerate() {
            let base = xk;
            let f = |d: i32| if d == 0 { base } else { base * xinv.powi(d) };
            let mag = accumulate(-(j as i32 + 1), row, &f);
            xk *= xinv;
            quiet = if mag < tol { quiet + 1 } else { 0 };
            if quiet >= 3 {
                break;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_moment_matches_elementary_integral() {
        // j = 3, b = 0, m = 1, a2 = 1: ∫_A^1 s^{-3} (1-s) ds
        let a = 0.5f64;
        let big_a = a * a;
        let shell = ShellProfile::new(Profile::BallType { a: vec![1.0, 1.0] }, 1.0, 1, a, 4, 2);
        let exact = (-0.5 + 1.0) - (-0.5 / (big_a * big_a) + 1.0 / big_a);
        let mu = PI * PI * exact;
        assert!((shell.neg[2][0] - 1.0 / mu).abs() < 1e-12 / mu);
    }

    #[test]
    fn positive_correction_matches_direct_moments() {
        // k = 2, b = 1, m = 2, a2 = 1: c = 1
        let a = 0.6f64;
        let big_a = a * a;
        let shell = ShellProfile::new(Profile::Egg { m: 2 }, 1.0, 2, a, 3, 2);
        let full = tanh_sinh(|s| s * s * (1.0 - s), 0.0, 1.0, 1e-14);
        let upper = tanh_sinh(|s| s * s * (1.0 - s), big_a, 1.0, 1e-14);
        let pref = PI * PI / 2.0;
        let expected = 1.0 / (pref * upper) - 1.0 / (pref * full);
        assert!((shell.pos[2][1] - expected).abs() < 1e-11 * expected);
    }
}
