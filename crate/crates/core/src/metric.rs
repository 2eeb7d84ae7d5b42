//! Bergman metric tensor, its realification, Christoffel symbols and the
//! Hahn-Lu comparison with the Carathéodory distance.

use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::geodesics::{bergman_distance, DistanceOptions};
use crate::jet::{exp_of, Jet, C64};
use crate::kernel::KernelModel;
use crate::points::{from_real, hdot, norm};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Metric data at a point. `christoffel[η][μ][ν]` is stored flat as
/// `η * (2n)^2 + μ * 2n + ν` in interleaved real coordinates.
#[derive(Clone, Debug)]
pub struct MetricState {
    pub point: Vec<C64>,
    pub g: DMatrix<C64>,
    pub g_real: DMatrix<f64>,
    pub christoffel: Option<Vec<f64>>,
}

impl MetricState {
    pub fn real_dim(&self) -> usize {
        self.g_real.nrows()
    }

    pub fn gamma(&self, eta: usize, mu: usize, nu: usize) -> Option<f64> {
        let d = self.real_dim();
        self.christoffel.as_ref().map(|c| c[eta * d * d + mu * d + nu])
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.g_real.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Structured dump for debugging.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump {
            point: Vec<[f64; 2]>,
            g: Vec<Vec<[f64; 2]>>,
            eigenvalues: Vec<f64>,
            christoffel_max_norm: Option<f64>,
        }
        let n = self.point.len();
        let dump = Dump {
            point: self.point.iter().map(|c| [c.re, c.im]).collect(),
            g: (0..n).map(|i| (0..n).map(|j| [self.g[(i, j)].re, self.g[(i, j)].im]).collect()).collect(),
            eigenvalues: self.eigenvalues(),
            christoffel_max_norm: self.christoffel.as_ref().map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        };
        serde_json::to_string_pretty(&dump).expect("plain data serializes")
    }
}

/// `g̃` with `ξᵀ g conj(ξ) = yᵀ g̃ y` for `y = (Re ξ_0, Im ξ_0, ...)`.
pub fn realify(g: &DMatrix<C64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for mu in 0..n {
        for nu in 0..n {
            let (a, b) = (g[(mu, nu)].re, g[(mu, nu)].im);
            r[(2 * mu, 2 * nu)] = a;
            r[(2 * mu + 1, 2 * nu + 1)] = a;
            r[(2 * mu, 2 * nu + 1)] = b;
            r[(2 * mu + 1, 2 * nu)] = -b;
        }
    }
    r
}

fn log_jet(model: &KernelModel, z: &[C64]) -> Result<Jet> {
    let k = model.jet_at(z, z);
    if !(k.value().re > 0.0) {
        return Err(Error::DegenerateMetric { point: format!("{z:?}"), min_eig: f64::NAN });
    }
    Ok(k.ln())
}

fn complex_metric(l: &Jet, n: usize) -> DMatrix<C64> {
    let mut g = DMatrix::from_fn(n, n, |mu, nu| l.coeff(&exp_of(&[mu, n + nu])));
    // enforce exact Hermitian symmetry
    for mu in 0..n {
        g[(mu, mu)] = C64::new(g[(mu, mu)].re, 0.0);
        for nu in mu + 1..n {
            let avg = 0.5 * (g[(mu, nu)] + g[(nu, mu)].conj());
            g[(mu, nu)] = avg;
            g[(nu, mu)] = avg.conj();
        }
    }
    g
}

fn check_inside(model: &KernelModel, z: &[C64]) -> Result<()> {
    if !model.domain().membership(z) {
        return Err(Error::OutsideDomain { domain: model.domain().label().to_string() });
    }
    Ok(())
}

/// Hermitian metric tensor `g_{μν} = ∂_μ ∂̄_ν log K(z, z)`.
pub fn metric_tensor(model: &KernelModel, z: &[C64]) -> Result<MetricState> {
    check_inside(model, z)?;
    let n = model.dim();
    let l = log_jet(model, z)?;
    let g = complex_metric(&l, n);
    let g_real = realify(&g);
    let state = MetricState { point: z.to_vec(), g, g_real, christoffel: None };
    let min_eig = state.eigenvalues()[0];
    if !(min_eig > DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateMetric { point: format!("{z:?}"), min_eig });
    }
    Ok(state)
}

/// `b(z, ξ) = (Σ g_{μν} ξ_μ conj(ξ_ν))^{1/2}`.
pub fn metric_length(model: &KernelModel, z: &[C64], xi: &[C64]) -> Result<f64> {
    let state = metric_tensor(model, z)?;
    let n = xi.len();
    let mut s = C64::new(0.0, 0.0);
    for mu in 0..n {
        for nu in 0..n {
            s += state.g[(mu, nu)] * xi[mu] * xi[nu].conj();
        }
    }
    Ok(s.re.max(0.0).sqrt())
}

/// Realified metric and its first derivatives `∂_τ g̃` in real coordinates.
pub struct MetricDerivatives {
    pub g_real: DMatrix<f64>,
    pub dg_real: Vec<DMatrix<f64>>,
}

/// `g̃` and `∂g̃/∂x_τ` at `z` without membership or degeneracy checks.
pub fn metric_derivatives_unchecked(model: &KernelModel, z: &[C64]) -> Result<MetricDerivatives> {
    let n = model.dim();
    let l = log_jet(model, z)?;
    let g = complex_metric(&l, n);
    let mut dg_real = Vec::with_capacity(2 * n);
    for kappa in 0..n {
        let dz = DMatrix::from_fn(n, n, |mu, nu| l.coeff(&exp_of(&[mu, n + nu, kappa])) * mult(mu, nu, kappa, false));
        let dzb = DMatrix::from_fn(n, n, |mu, nu| l.coeff(&exp_of(&[mu, n + nu, n + kappa])) * mult(mu, nu, kappa, true));
        let dx = &dz + &dzb;
        let dy = (&dz - &dzb) * C64::new(0.0, 1.0);
        dg_real.push(realify(&dx));
        dg_real.push(realify(&dy));
    }
    Ok(MetricDerivatives { g_real: realify(&g), dg_real })
}

/// Converts a Taylor coefficient of `z_μ ζ_ν z_κ` (or `ζ_κ`) to a derivative.
fn mult(mu: usize, nu: usize, kappa: usize, bar: bool) -> f64 {
    let repeated = if bar { nu == kappa } else { mu == kappa };
    if repeated {
        2.0
    } else {
        1.0
    }
}

/// Christoffel symbols `Γ^η_{μν}` of the realified metric at the real point `x`.
pub fn christoffel(model: &KernelModel, x: &[f64]) -> Result<MetricState> {
    let z = from_real(x);
    let mut state = metric_tensor(model, &z)?;
    let d = metric_derivatives_unchecked(model, &z)?;
    let dim = 2 * model.dim();
    let ginv = state
        .g_real
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric { point: format!("{z:?}"), min_eig: 0.0 })?
        .inverse();
    let mut gamma = vec![0.0; dim * dim * dim];
    for eta in 0..dim {
        for mu in 0..dim {
            for nu in 0..dim {
                let mut s = 0.0;
                for tau in 0..dim {
                    s += (d.dg_real[mu][(nu, tau)] + d.dg_real[nu][(tau, mu)] - d.dg_real[tau][(mu, nu)]) * ginv[(tau, eta)];
                }
                gamma[eta * dim * dim + mu * dim + nu] = 0.5 * s;
            }
        }
    }
    state.christoffel = Some(gamma);
    Ok(state)
}

/// Closed-form Carathéodory distance on the disc, balls and polydiscs.
pub fn caratheodory_distance(domain: &Domain, z: &[C64], w: &[C64]) -> Result<f64> {
    match domain.kind() {
        DomainKind::Disc | DomainKind::Ball(_) => Ok(ball_pseudo_hyperbolic(z, w).atanh()),
        DomainKind::Polydisc(_) => Ok(z
            .iter()
            .zip(w)
            .map(|(a, b)| ball_pseudo_hyperbolic(&[*a], &[*b]).atanh())
            .fold(0.0, f64::max)),
        _ => Err(Error::UnsupportedDomain(format!("no Carathéodory closed form for `{}`", domain.label()))),
    }
}

/// `|φ_a(z)|` for the ball automorphism exchanging `a` and `0`.
pub fn ball_pseudo_hyperbolic(a: &[C64], z: &[C64]) -> f64 {
    let na = norm(a).powi(2);
    let nz = norm(z).powi(2);
    let d = (C64::new(1.0, 0.0) - hdot(z, a)).norm_sqr();
    let s = 1.0 - (1.0 - na) * (1.0 - nz) / d;
    s.max(0.0).sqrt().min(1.0 - f64::EPSILON)
}

/// Closed-form Bergman distance on balls: `√(n+1) artanh |φ_a(z)|`.
pub fn ball_bergman_distance(a: &[C64], z: &[C64]) -> f64 {
    ((a.len() + 1) as f64).sqrt() * ball_pseudo_hyperbolic(a, z).atanh()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HahnLuMargin {
    pub caratheodory: f64,
    pub bergman: f64,
    pub margin: f64,
}

/// `d^b(z,w) - d^c(z,w)` for each pair, with the Bergman distance computed
/// numerically.
pub fn hahn_lu_check(
    model: &KernelModel,
    pairs: &[(Vec<C64>, Vec<C64>)],
    opts: &DistanceOptions,
) -> Result<Vec<HahnLuMargin>> {
    pairs
        .iter()
        .map(|(z, w)| {
            let c = caratheodory_distance(model.domain(), z, w)?;
            let b = bergman_distance(model, z, w, opts)?.distance;
            Ok(HahnLuMargin { caratheodory: c, bergman: b, margin: b - c })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, KernelOptions};
    use crate::points::{c, real_point};

    fn closed(d: &Domain) -> KernelModel {
        build_kernel(d, &KernelOptions::default()).unwrap()
    }

    #[test]
    fn centre_tensors() {
        let g = metric_tensor(&closed(&Domain::disc()), &[c(0.0, 0.0)]).unwrap().g;
        assert!((g[(0, 0)].re - 2.0).abs() < 1e-14);
        for n in 1..=3 {
            let g = metric_tensor(&closed(&Domain::ball(n)), &vec![c(0.0, 0.0); n]).unwrap().g;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { (n + 1) as f64 } else { 0.0 };
                    assert!((g[(i, j)] - want).norm() < 1e-12);
                }
            }
        }
        let g = metric_tensor(&closed(&Domain::half_plane()), &[c(-1.0, 0.0)]).unwrap().g;
        assert!((g[(0, 0)].re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn lengths() {
        let disc = closed(&Domain::disc());
        assert!((metric_length(&disc, &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(metric_length(&disc, &[c(0.3, 0.0)], &[c(0.0, 0.0)]).unwrap(), 0.0);
        let bidisc = closed(&Domain::polydisc(2));
        let l = metric_length(&bidisc, &real_point(&[0.0, 0.0]), &real_point(&[1.0, 1.0])).unwrap();
        assert!((l - 2.0).abs() < 1e-13);
    }

    #[test]
    fn disc_christoffel_matches_finite_differences() {
        let disc = closed(&Domain::disc());
        let zero = christoffel(&disc, &[0.0, 0.0]).unwrap();
        assert!(zero.christoffel.unwrap().iter().all(|v| v.abs() < 1e-13));
        // g̃ = 2 (1 - |x|^2)^{-2} I
        let x = [0.5, 0.0];
        let state = christoffel(&disc, &x).unwrap();
        let gfun = |x: &[f64]| 2.0 / (1.0 - x[0] * x[0] - x[1] * x[1]).powi(2);
        let h = 1e-5;
        let dg: Vec<f64> = (0..2)
            .map(|t| {
                let mut p = x;
                let mut m = x;
                p[t] += h;
                m[t] -= h;
                (gfun(&p) - gfun(&m)) / (2.0 * h)
            })
            .collect();
        let g = gfun(&x);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for eta in 0..2 {
            for mu in 0..2 {
                for nu in 0..2 {
                    let mut s = 0.0;
                    for tau in 0..2 {
                        s += (dg[mu] * delta(nu, tau) + dg[nu] * delta(tau, mu) - dg[tau] * delta(mu, nu)) * delta(tau, eta) / g;
                    }
                    let got = state.gamma(eta, mu, nu).unwrap();
                    assert!((got - 0.5 * s).abs() < 1e-6, "{eta}{mu}{nu}: {got} vs {}", 0.5 * s);
                }
            }
        }
    }

    #[test]
    fn closed_form_distances() {
        let d = caratheodory_distance(&Domain::disc(), &[c(0.0, 0.0)], &[c(0.5, 0.0)]).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-15);
        assert!((ball_bergman_distance(&[c(0.0, 0.0)], &[c(0.5, 0.0)]) - 2f64.sqrt() * 0.5f64.atanh()).abs() < 1e-15);
    }
}
