//! Truncated multivariate Taylor polynomials ("jets") of total order 3 with
//! complex coefficients.
//!
//! Kernels are holomorphic in `z` and in `ζ = conj(w)`, so every kernel in the
//! catalogue is evaluated once on jets in the `2n` variables `(z, ζ)` and all
//! mixed partials up to order 3 fall out of the coefficients. Metric tensors
//! and Christoffel symbols are read off the jet of `log K`.

use num_complex::Complex64;
use std::sync::LazyLock;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub type C64 = Complex64;

/// Highest total degree carried by a jet.
pub const ORDER: usize = 3;
/// Largest supported number of jet variables (`2n` with `n <= 3`).
pub const MAX_VARS: usize = 6;
/// Number of monomials of total degree `<= 3` in six variables.
pub const MAX_COEFFS: usize = 84;

pub type Exponent = [u8; MAX_VARS];

pub(crate) struct JetTable {
    pub exps: Vec<Exponent>,
    /// `(i, j, k)` with `exps[i] + exps[j] = exps[k]`.
    pairs: Vec<(u8, u8, u8)>,
}

impl JetTable {
    fn build(nv: usize) -> Self {
        let mut exps: Vec<Exponent> = Vec::new();
        for d in 0..=ORDER {
            let mut block = Vec::new();
            enumerate(nv, d, &mut [0u8; MAX_VARS], 0, &mut block);
            // graded reverse-lex is not needed; lexicographic descending keeps x_0 first
            block.sort_by(|a, b| b.cmp(a));
            exps.extend(block);
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut pairs = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if degree[i] + degree[j] > ORDER as u8 {
                    continue;
                }
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = a[v] + b[v];
                }
                let k = exps.iter().position(|e| *e == s).expect("closed under addition");
                pairs.push((i as u8, j as u8, k as u8));
            }
        }
        Self { exps, pairs }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn index_of(&self, e: &Exponent) -> Option<usize> {
        self.exps.iter().position(|x| x == e)
    }
}

fn enumerate(nv: usize, remaining: usize, cur: &mut Exponent, var: usize, out: &mut Vec<Exponent>) {
    if var + 1 == nv {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    if nv == 0 {
        if remaining == 0 {
            out.push(*cur);
        }
        return;
    }
    for k in 0..=remaining {
        cur[var] = k as u8;
        enumerate(nv, remaining - k, cur, var + 1, out);
    }
    cur[var] = 0;
}

static TABLES: LazyLock<Vec<JetTable>> = LazyLock::new(|| (0..=MAX_VARS).map(JetTable::build).collect());

pub(crate) fn table(nv: usize) -> &'static JetTable {
    &TABLES[nv]
}

/// Truncated Taylor expansion of a holomorphic function around a base point.
#[derive(Clone, Copy)]
pub struct Jet {
    nv: u8,
    len: u8,
    c: [C64; MAX_COEFFS],
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet").field("nv", &self.nv).field("c", &&self.c[..self.len as usize]).finish()
    }
}

impl Jet {
    pub fn zero(nv: usize) -> Self {
        assert!(nv <= MAX_VARS, "at most {MAX_VARS} jet variables");
        Self { nv: nv as u8, len: table(nv).len() as u8, c: [C64::new(0.0, 0.0); MAX_COEFFS] }
    }

    pub fn constant(nv: usize, value: C64) -> Self {
        let mut j = Self::zero(nv);
        j.c[0] = value;
        j
    }

    /// The independent variable `var` expanded around `value`.
    pub fn variable(nv: usize, var: usize, value: C64) -> Self {
        let mut j = Self::constant(nv, value);
        let mut e = [0u8; MAX_VARS];
        e[var] = 1;
        let idx = table(nv).index_of(&e).expect("variable in range");
        j.c[idx] = C64::new(1.0, 0.0);
        j
    }

    pub fn nvars(&self) -> usize {
        self.nv as usize
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c[..self.len as usize]
    }

    pub fn coeff(&self, e: &Exponent) -> C64 {
        table(self.nvars()).index_of(e).map(|i| self.c[i]).unwrap_or_default()
    }

    /// Partial derivative `∂^e f` at the base point.
    pub fn derivative(&self, e: &Exponent) -> C64 {
        let fact: f64 = e.iter().map(|&k| factorial(k as usize)).product();
        self.coeff(e) * fact
    }

    /// Jet with the constant term removed.
    pub fn nilpotent(&self) -> Self {
        let mut j = *self;
        j.c[0] = C64::new(0.0, 0.0);
        j
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut j = *self;
        for c in j.c[..self.len as usize].iter_mut() {
            *c *= s;
        }
        j
    }

    pub fn add_const(&self, s: C64) -> Self {
        let mut j = *self;
        j.c[0] += s;
        j
    }

    /// `f(self)` for a scalar function with derivatives `d = [f, f', f'', f''']`
    /// at the constant term.
    pub fn compose(&self, d: [C64; 4]) -> Self {
        let n = self.nilpotent();
        let n2 = n * n;
        let n3 = n2 * n;
        let mut out = Jet::constant(self.nvars(), d[0]);
        let len = self.len as usize;
        for i in 1..len {
            out.c[i] = d[1] * n.c[i] + d[2] * 0.5 * n2.c[i] + d[3] * (1.0 / 6.0) * n3.c[i];
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0];
        let r = a.inv();
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    /// Principal-branch power with a real exponent.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.c[0];
        let f0 = a.powf(p);
        let r = a.inv();
        let f1 = f0 * r * p;
        let f2 = f1 * r * (p - 1.0);
        let f3 = f2 * r * (p - 2.0);
        self.compose([f0, f1, f2, f3])
    }

    pub fn powi(&self, k: i32) -> Self {
        if (0..=3).contains(&k) {
            let mut out = Jet::constant(self.nvars(), C64::new(1.0, 0.0));
            for _ in 0..k {
                out = out * *self;
            }
            return out;
        }
        let a = self.c[0];
        let f0 = a.powi(k);
        let r = a.inv();
        let kf = k as f64;
        let f1 = f0 * r * kf;
        let f2 = f1 * r * (kf - 1.0);
        let f3 = f2 * r * (kf - 2.0);
        self.compose([f0, f1, f2, f3])
    }

    pub fn ln(&self) -> Self {
        let a = self.c[0];
        let r = a.inv();
        self.compose([a.ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        self.compose([e, e, e, e])
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        debug_assert_eq!(self.nv, rhs.nv);
        for i in 0..self.len as usize {
            self.c[i] += rhs.c[i];
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        debug_assert_eq!(self.nv, rhs.nv);
        for i in 0..self.len as usize {
            self.c[i] -= rhs.c[i];
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.nv, rhs.nv);
        let mut out = Jet::zero(self.nvars());
        for &(i, j, k) in &table(self.nvars()).pairs {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: C64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl std::ops::Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

/// Exponent with a single `1` at `var`.
pub fn unit_exp(var: usize) -> Exponent {
    let mut e = [0u8; MAX_VARS];
    e[var] += 1;
    e
}

/// Exponent for the multiset of variables `vars`.
pub fn exp_of(vars: &[usize]) -> Exponent {
    let mut e = [0u8; MAX_VARS];
    for &v in vars {
        e[v] += 1;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn table_sizes() {
        assert_eq!(table(1).len(), 4);
        assert_eq!(table(2).len(), 10);
        assert_eq!(table(4).len(), 35);
        assert_eq!(table(6).len(), MAX_COEFFS);
    }

    #[test]
    fn product_rule_matches_expansion() {
        // f = (1 + x + y)^3 around (0.5, -0.25)
        let x = Jet::variable(2, 0, c(0.5));
        let y = Jet::variable(2, 1, c(-0.25));
        let s = (x + y).add_const(c(1.0));
        let f = s * s * s;
        // d^3 f / dx^2 dy = 6
        assert!((f.derivative(&exp_of(&[0, 0, 1])) - c(6.0)).norm() < 1e-12);
        // d f / dx = 3 (1.25)^2
        assert!((f.derivative(&exp_of(&[0])) - c(3.0 * 1.25 * 1.25)).norm() < 1e-12);
    }

    #[test]
    fn log_and_recip_derivatives() {
        let x = Jet::variable(1, 0, c(2.0));
        let l = x.ln();
        assert!((l.derivative(&exp_of(&[0, 0, 0])) - c(2.0 / 8.0)).norm() < 1e-14);
        let r = x.recip();
        assert!((r.derivative(&exp_of(&[0, 0])) - c(2.0 / 8.0)).norm() < 1e-14);
        let p = x.powf(-2.5);
        let expect = -2.5 * -3.5 * -4.5 * 2.0f64.powf(-5.5);
        assert!((p.derivative(&exp_of(&[0, 0, 0])) - c(expect)).norm() < 1e-13);
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = Jet::variable(3, 0, C64::new(0.3, 0.2));
        let y = Jet::variable(3, 2, C64::new(-0.1, 0.4));
        let f = (x * y).add_const(c(1.5));
        let g = f.ln().exp();
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
