//! Reproducing-property and extremal-problem oracles.

use super::{exact_moment, has_exact_moments, KernelModel};
use crate::error::{Error, Result};
use crate::jet::C64;
use crate::quadrature::ScrambledHalton;

/// Finite combination `Σ c_β z^β`.
pub type MonomialSum = Vec<(Vec<u32>, C64)>;

fn eval_monomials(f: &MonomialSum, z: &[C64]) -> C64 {
    f.iter()
        .map(|(b, c)| b.iter().zip(z).fold(*c, |acc, (&e, zk)| acc * zk.powu(e)))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReproducingMethod {
    /// Exact orthogonality relations with closed-form moments.
    Moments,
    /// Box-rejection quasi-Monte Carlo integration.
    Quadrature { nodes: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReproducingResult {
    pub residual: f64,
    pub error_bound: f64,
}

/// `|∫ f conj(K(·, w)) dλ - f(w)|` for the model's kernel.
pub fn reproducing_check(
    model: &KernelModel,
    f: &MonomialSum,
    w: &[C64],
    method: ReproducingMethod,
) -> Result<ReproducingResult> {
    let fw = eval_monomials(f, w);
    match method {
        ReproducingMethod::Moments => {
            let domain = model.domain();
            if !has_exact_moments(domain) {
                return Err(Error::QuadratureUnavailable(format!("no closed-form moments for `{}`", domain.label())));
            }
            let mut integral = C64::new(0.0, 0.0);
            let mut scale = 0.0;
            for (beta, c) in f {
                let m = exact_moment(domain, beta).expect("checked above");
                let coef = model
                    .series_coefficient(beta)
                    .ok_or_else(|| Error::QuadratureUnavailable("model has no monomial expansion".into()))?;
                let wb = beta.iter().zip(w).fold(C64::new(1.0, 0.0), |acc, (&e, wk)| acc * wk.powu(e));
                integral += c * wb * (coef * m);
                scale += (c * wb).norm();
            }
            Ok(ReproducingResult { residual: (integral - fw).norm(), error_bound: 1e-13 * scale.max(1.0) })
        }
        ReproducingMethod::Quadrature { nodes, seed } => {
            let domain = model.domain();
            let bbox = domain.bounding_box().ok_or_else(|| {
                Error::QuadratureUnavailable(format!("`{}` has no bounding box", domain.label()))
            })?;
            let dim = bbox.len();
            let n = dim / 2;
            let vol: f64 = bbox.iter().map(|(l, h)| h - l).product();
            let seq = ScrambledHalton::new(dim, Some(seed));
            let mut u = vec![0.0; dim];
            let mut z = vec![C64::new(0.0, 0.0); n];
            let mut sum = C64::new(0.0, 0.0);
            let mut sum_sq = 0.0;
            for i in 0..nodes {
                seq.point(i, &mut u);
                for k in 0..n {
                    let (l0, h0) = bbox[2 * k];
                    let (l1, h1) = bbox[2 * k + 1];
                    z[k] = C64::new(l0 + (h0 - l0) * u[2 * k], l1 + (h1 - l1) * u[2 * k + 1]);
                }
                if !domain.membership(&z) {
                    continue;
                }
                // conj(K(z, w)) = K(w, z)
                let zeta: Vec<C64> = z.iter().map(|c| c.conj()).collect();
                let k = model.value_inner(w, &zeta);
                let v = eval_monomials(f, &z) * k;
                sum += v;
                sum_sq += v.norm_sqr();
            }
            let nf = nodes as f64;
            let mean = sum / nf;
            let var = (sum_sq / nf - mean.norm_sqr()).max(0.0);
            let integral = mean * vol;
            Ok(ReproducingResult { residual: (integral - fw).norm(), error_bound: 3.0 * vol * (var / nf).sqrt() })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalResult {
    pub holds: bool,
    /// `∫ |K(·,w)/K(w,w)|^2 dλ = 1/K(w,w)`.
    pub minimum: f64,
    pub trial_integrals: Vec<f64>,
}

/// Checks that `K(·,w)/K(w,w)` has the least `L^2` norm among the trial
/// functions normalized by `g(w) = 1`.
pub fn extremal_check(model: &KernelModel, w: &[C64], trials: &[MonomialSum]) -> Result<ExtremalResult> {
    let domain = model.domain();
    if !has_exact_moments(domain) {
        return Err(Error::UnsupportedDomain(domain.label().to_string()));
    }
    let minimum = 1.0 / model.diagonal(w);
    let mut trial_integrals = Vec::with_capacity(trials.len());
    for g in trials {
        let gw = eval_monomials(g, w);
        if (gw - C64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::InvalidArgument(format!("trial function has g(w) = {gw}, expected 1")));
        }
        // monomials are orthogonal: merge repeated exponents first
        let mut merged: std::collections::BTreeMap<&Vec<u32>, C64> = Default::default();
        for (b, c) in g {
            *merged.entry(b).or_default() += c;
        }
        let integral: f64 = merged.iter().map(|(b, c)| c.norm_sqr() * exact_moment(domain, b).unwrap()).sum();
        trial_integrals.push(integral);
    }
    let holds = trial_integrals.iter().all(|&t| minimum <= t * (1.0 + 1e-10));
    Ok(ExtremalResult { holds, minimum, trial_integrals })
}

/// `K_d(·,w)/K(w,w)` truncated to total degree `degree`, as a monomial sum.
pub fn normalized_kernel_trial(model: &KernelModel, w: &[C64], degree: usize) -> Result<MonomialSum> {
    let kww = model.diagonal(w);
    let mut out = Vec::new();
    for a in super::exponents_up_to(model.dim(), degree) {
        let c = model
            .series_coefficient(&a)
            .ok_or_else(|| Error::UnsupportedDomain(model.domain().label().to_string()))?;
        let wb = a.iter().zip(w).fold(C64::new(1.0, 0.0), |acc, (&e, wk)| acc * wk.conj().powu(e));
        out.push((a, wb * (c / kww)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use crate::kernel::{build_kernel, KernelOptions};
    use crate::points::c;
    use std::f64::consts::PI;

    #[test]
    fn disc_reproducing_by_moments() {
        let closed = build_kernel(&Domain::disc(), &KernelOptions::default()).unwrap();
        let one: MonomialSum = vec![(vec![0], c(1.0, 0.0))];
        let r = reproducing_check(&closed, &one, &[c(0.0, 0.0)], ReproducingMethod::Moments).unwrap();
        assert!(r.residual < 1e-10);
        let series = build_kernel(&Domain::disc(), &KernelOptions::series(40)).unwrap();
        let z2: MonomialSum = vec![(vec![2], c(1.0, 0.0))];
        let r = reproducing_check(&series, &z2, &[c(0.5, 0.0)], ReproducingMethod::Moments).unwrap();
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn disc_extremal() {
        let disc = build_kernel(&Domain::disc(), &KernelOptions::default()).unwrap();
        let w = [c(0.0, 0.0)];
        let trials = vec![vec![(vec![0], c(1.0, 0.0))], vec![(vec![0], c(1.0, 0.0)), (vec![1], c(5.0, 0.0))]];
        let r = extremal_check(&disc, &w, &trials).unwrap();
        assert!(r.holds);
        assert!((r.minimum - PI).abs() < 1e-14);
        assert!((r.trial_integrals[1] - (PI + 25.0 * PI / 2.0)).abs() < 1e-12);
        let w = [c(0.5, 0.2)];
        let own = normalized_kernel_trial(&disc, &w, 200).unwrap();
        let r = extremal_check(&disc, &w, &[own]).unwrap();
        assert!(r.holds);
        assert!((r.trial_integrals[0] - r.minimum).abs() < 1e-10 * r.minimum);
    }
}
