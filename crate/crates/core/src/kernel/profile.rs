//! Kernels of Reinhardt domains written as functions `F(x)` of the
//! products `x_k = z_k conj(w_k)`.

use super::shell::ShellProfile;
use crate::jet::{factorial, table, Jet, C64};
use std::f64::consts::PI;

/// Truncated power series `F(x) = Σ c_α x^α` with (possibly negative)
/// integer exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesProfile {
    pub(crate) n: usize,
    pub(crate) terms: Vec<(Vec<i32>, f64)>,
}

impl SeriesProfile {
    pub fn new(n: usize, terms: Vec<(Vec<i32>, f64)>) -> Self {
        assert!(terms.iter().all(|(a, _)| a.len() == n));
        Self { n, terms }
    }

    pub fn terms(&self) -> &[(Vec<i32>, f64)] {
        &self.terms
    }

    pub fn value(&self, x: &[C64]) -> C64 {
        let pows = PowerCache::new(x, &self.terms);
        self.terms.iter().map(|(a, c)| pows.monomial(a) * *c).sum()
    }

    /// Taylor coefficients of `F` at `x0`, indexed like `table(n)`.
    pub fn taylor(&self, x0: &[C64]) -> Vec<C64> {
        let pows = PowerCache::new(x0, &self.terms);
        let tab = table(self.n);
        let mut out = vec![C64::new(0.0, 0.0); tab.len()];
        for (a, c) in &self.terms {
            for (slot, beta) in out.iter_mut().zip(&tab.exps) {
                let mut coef = *c;
                let mut mono = C64::new(1.0, 0.0);
                for k in 0..self.n {
                    let b = beta[k] as i32;
                    let f = falling(a[k], b) / factorial(b as usize);
                    if f == 0.0 {
                        coef = 0.0;
                        break;
                    }
                    coef *= f;
                    mono *= pows.get(k, a[k] - b);
                }
                if coef != 0.0 {
                    *slot += mono * coef;
                }
            }
        }
        out
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        let x0: Vec<C64> = x.iter().map(Jet::value).collect();
        substitute(&self.taylor(&x0), x)
    }
}

/// `a (a-1) ... (a-b+1)`.
pub(crate) fn falling(a: i32, b: i32) -> f64 {
    (0..b).map(|i| (a - i) as f64).product()
}

/// Integer powers of each coordinate over the exponent range used by a series.
pub(crate) struct PowerCache {
    lo: Vec<i32>,
    pows: Vec<Vec<C64>>,
}

impl PowerCache {
    pub(crate) fn new(x: &[C64], terms: &[(Vec<i32>, f64)]) -> Self {
        let n = x.len();
        let mut lo = vec![0i32; n];
        let mut hi = vec![0i32; n];
        for (a, _) in terms {
            for k in 0..n {
                lo[k] = lo[k].min(if a[k] < 0 { a[k] - 3 } else { 0 });
                hi[k] = hi[k].max(a[k]);
            }
        }
        let pows = (0..n)
            .map(|k| {
                let base = x[k];
                let len = (hi[k] - lo[k] + 1) as usize;
                let mut v = vec![C64::new(0.0, 0.0); len];
                let mut p = C64::new(1.0, 0.0);
                for e in 0..=hi[k] {
                    v[(e - lo[k]) as usize] = p;
                    p *= base;
                }
                if lo[k] < 0 {
                    let inv = base.inv();
                    let mut p = inv;
                    for e in (lo[k]..0).rev() {
                        v[(e - lo[k]) as usize] = p;
                        p *= inv;
                    }
                }
                v
            })
            .collect();
        Self { lo, pows }
    }

    pub(crate) fn get(&self, k: usize, e: i32) -> C64 {
        self.pows[k][(e - self.lo[k]) as usize]
    }

    pub(crate) fn monomial(&self, a: &[i32]) -> C64 {
        a.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (k, &e)| acc * self.get(k, e))
    }
}

/// Evaluates `Σ_β t_β (X - x0)^β` for jets `X` whose constant terms are `x0`.
pub(crate) fn substitute(taylor: &[C64], x: &[Jet]) -> Jet {
    let n = x.len();
    let nv = x[0].nvars();
    let tab = table(n);
    let one = C64::new(1.0, 0.0);
    let powers: Vec<[Jet; 4]> = x
        .iter()
        .map(|xk| {
            let d = xk.nilpotent();
            let d2 = d * d;
            [Jet::constant(nv, one), d, d2, d2 * d]
        })
        .collect();
    let mut out = Jet::zero(nv);
    for (t, beta) in taylor.iter().zip(&tab.exps) {
        if *t == C64::new(0.0, 0.0) {
            continue;
        }
        let mut term = Jet::constant(nv, *t);
        for k in 0..n {
            if beta[k] > 0 {
                term *= powers[k][beta[k] as usize];
            }
        }
        out += term;
    }
    out
}

/// Kernel of a Reinhardt domain as a function of `x_k = z_k conj(w_k)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `Σ a_k |z_k|^2 < 1`: `(n!/π^n) Π a_k (1 - Σ a_k x_k)^{-(n+1)}`.
    BallType { a: Vec<f64> },
    /// `Π (1/π) (1 - x_k)^{-2}`.
    Polydisc(usize),
    /// `|z_1|^2 + |z_2|^{2m} < 1`.
    Egg { m: u32 },
    Series(SeriesProfile),
    Shell(Box<ShellProfile>),
}

impl Profile {
    pub fn value(&self, x: &[C64]) -> C64 {
        let one = C64::new(1.0, 0.0);
        match self {
            Profile::BallType { a } => {
                let n = a.len();
                let s: C64 = x.iter().zip(a).map(|(x, a)| x * *a).sum();
                (one - s).powi(-(n as i32 + 1)) * ball_constant(a)
            }
            Profile::Polydisc(_) => x.iter().map(|x| (one - x).powi(-2) / PI).product(),
            Profile::Egg { m } => {
                let mf = *m as f64;
                let t = one - x[0];
                let r = t.powf(-1.0 / mf);
                let u = x[1] * r;
                let bracket = (one + u) / ((one - u).powi(3) * mf) + (one - u).powi(-2);
                t.powi(-2) * r * bracket / (PI * PI)
            }
            Profile::Series(s) => s.value(x),
            Profile::Shell(s) => s.value(x),
        }
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        let one = C64::new(1.0, 0.0);
        match self {
            Profile::BallType { a } => {
                let n = a.len();
                let mut s = Jet::constant(x[0].nvars(), one);
                for (xk, ak) in x.iter().zip(a) {
                    s -= *xk * *ak;
                }
                s.powi(-(n as i32 + 1)) * ball_constant(a)
            }
            Profile::Polydisc(_) => {
                let mut acc = Jet::constant(x[0].nvars(), C64::new(1.0, 0.0));
                for xk in x {
                    acc *= (-*xk).add_const(one).powi(-2) * (1.0 / PI);
                }
                acc
            }
            Profile::Egg { m } => {
                let mf = *m as f64;
                let t = (-x[0]).add_const(one);
                let r = t.powf(-1.0 / mf);
                let u = x[1] * r;
                let omu = (-u).add_const(one);
                let bracket = u.add_const(one) * omu.powi(-3) * (1.0 / mf) + omu.powi(-2);
                t.powi(-2) * r * bracket * (1.0 / (PI * PI))
            }
            Profile::Series(s) => s.jet(x),
            Profile::Shell(s) => s.jet(x),
        }
    }
}

fn ball_constant(a: &[f64]) -> f64 {
    let n = a.len();
    factorial(n) / PI.powi(n as i32) * a.iter().product::<f64>()
}
