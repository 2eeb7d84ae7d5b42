//! Bergman kernels: closed forms, truncated monomial series, pullbacks
//! through Cayley charts and affine maps, and products.

mod checks;
mod moments;
mod profile;
mod shell;

pub use checks::{extremal_check, normalized_kernel_trial, reproducing_check, ExtremalResult, MonomialSum, ReproducingMethod, ReproducingResult};
pub use moments::{
    build_moment_table, exact_moment, exponents_up_to, has_exact_moments, quadrature_moments, MomentSource,
    MomentTable, CACHE_ENV,
};
pub use profile::{Profile, SeriesProfile};
pub use shell::ShellProfile;

use crate::domains::{cayley, AffineMap, CayleyChart, Domain, DomainKind};
use crate::error::{Error, Result};
use crate::jet::{Exponent, Jet, C64, MAX_VARS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    ClosedForm,
    Series,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// `None` prefers a closed form and falls back to a series.
    pub mode: Option<KernelMode>,
    pub degree: usize,
    pub moment_source: MomentSource,
    /// Euclidean distance to the boundary below which values are flagged.
    /// Defaults to 0.05 for series kernels and `1e-7` for closed forms.
    pub trust_margin: Option<f64>,
    /// Laurent-table size for shell intersections.
    pub shell_terms: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { mode: None, degree: 40, moment_source: MomentSource::ClosedFormBeta, trust_margin: None, shell_terms: 160 }
    }
}

impl KernelOptions {
    pub fn series(degree: usize) -> Self {
        Self { mode: Some(KernelMode::Series), degree, ..Self::default() }
    }

    pub fn closed_form() -> Self {
        Self { mode: Some(KernelMode::ClosedForm), ..Self::default() }
    }
}

pub const SERIES_TRUST_MARGIN: f64 = 0.05;
pub const CLOSED_FORM_TRUST_MARGIN: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Profile(Profile),
    Charted { chart: CayleyChart, inner: Box<KernelModel> },
    /// Kernel of `A(base)`; `inv` is `A^{-1}`.
    Affine { inv: AffineMap, inv_det_abs2: f64, base: Box<KernelModel> },
    Product(Vec<KernelModel>),
}

/// An evaluable Bergman kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelModel {
    domain: Domain,
    mode: KernelMode,
    repr: Repr,
    degree: Option<usize>,
    moments: Option<MomentSource>,
    trust_margin: f64,
}

/// Kernel value with a flag raised when either argument lies outside the
/// trusted region of the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: C64,
    pub warning: bool,
}

/// Mixed partials `∂^a_z ∂^b_{conj w} K` up to total order 3.
#[derive(Clone, Debug)]
pub struct KernelDerivatives {
    n: usize,
    jet: Jet,
}

impl KernelDerivatives {
    /// `∂^a_z ∂^b_{conj w} K(z, w)`; `None` if the total order exceeds 3.
    pub fn get(&self, a: &[u8], b: &[u8]) -> Option<C64> {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        let total: u32 = a.iter().chain(b).map(|&v| v as u32).sum();
        if total > 3 {
            return None;
        }
        let mut e: Exponent = [0; MAX_VARS];
        e[..self.n].copy_from_slice(a);
        e[self.n..2 * self.n].copy_from_slice(b);
        Some(self.jet.derivative(&e))
    }

    pub fn value(&self) -> C64 {
        self.jet.value()
    }

    pub fn jet(&self) -> &Jet {
        &self.jet
    }
}

/// Builds the kernel of `domain`.
pub fn build_kernel(domain: &Domain, opts: &KernelOptions) -> Result<KernelModel> {
    let unsupported = || Error::UnsupportedDomain(domain.label().to_string());
    let want_series = opts.mode == Some(KernelMode::Series);
    let closed = |profile: Profile| -> Result<KernelModel> {
        if want_series {
            series_model(domain, opts)
        } else {
            Ok(KernelModel::from_parts(domain.clone(), KernelMode::ClosedForm, Repr::Profile(profile), opts))
        }
    };
    match domain.kind() {
        DomainKind::Disc => closed(Profile::BallType { a: vec![1.0] }),
        DomainKind::Ball(n) => closed(Profile::BallType { a: vec![1.0; *n] }),
        DomainKind::Ellipsoid(a) => closed(Profile::BallType { a: a.clone() }),
        DomainKind::Polydisc(n) => closed(Profile::Polydisc(*n)),
        DomainKind::Egg { n: 2, exponent } => closed(Profile::Egg { m: exponent / 2 }),
        DomainKind::Egg { .. } => {
            if opts.mode == Some(KernelMode::ClosedForm) {
                return Err(unsupported());
            }
            series_model(domain, opts)
        }
        DomainKind::HalfPlane | DomainKind::Siegel(_) | DomainKind::ModelPolynomial(_) => {
            if want_series {
                return Err(unsupported());
            }
            let chart = cayley(domain).map_err(|_| unsupported())?;
            let inner = build_kernel(chart.target(), &KernelOptions::closed_form())?;
            Ok(KernelModel::from_parts(
                domain.clone(),
                KernelMode::ClosedForm,
                Repr::Charted { chart, inner: Box::new(inner) },
                opts,
            ))
        }
        DomainKind::Product(factors) => {
            let parts = factors.iter().map(|f| build_kernel(f, opts)).collect::<Result<Vec<_>>>()?;
            let mode = if parts.iter().any(|p| p.mode == KernelMode::Series) {
                KernelMode::Series
            } else {
                KernelMode::ClosedForm
            };
            let mut m = KernelModel::from_parts(domain.clone(), mode, Repr::Product(parts), opts);
            m.degree = if mode == KernelMode::Series { Some(opts.degree) } else { None };
            Ok(m)
        }
        DomainKind::AffineImage { base, map, .. } => {
            let inner = build_kernel(base, opts)?;
            Ok(KernelModel::affine_pullback(domain.clone(), map, inner))
        }
        DomainKind::Intersection(parts) => shell_model(domain, parts, opts),
        DomainKind::CoordinateShell { .. } => Err(unsupported()),
    }
}

fn series_model(domain: &Domain, opts: &KernelOptions) -> Result<KernelModel> {
    if !has_exact_moments(domain) {
        return Err(Error::UnsupportedDomain(domain.label().to_string()));
    }
    let table = build_moment_table(domain, opts.degree, opts.moment_source)?;
    let terms = table.iter().map(|(a, m, _)| (a.iter().map(|&e| e as i32).collect(), 1.0 / m)).collect();
    let mut model = KernelModel::from_parts(
        domain.clone(),
        KernelMode::Series,
        Repr::Profile(Profile::Series(SeriesProfile::new(domain.dim(), terms))),
        opts,
    );
    model.degree = Some(opts.degree);
    model.moments = Some(opts.moment_source);
    Ok(model)
}

fn shell_model(domain: &Domain, parts: &[Domain], opts: &KernelOptions) -> Result<KernelModel> {
    let unsupported = |why: &str| Error::UnsupportedIntersection(format!("{}: {why}", domain.label()));
    let (base, shell) = match parts {
        [a, b] => match (a.kind(), b.kind()) {
            (_, DomainKind::CoordinateShell { .. }) => (a, b),
            (DomainKind::CoordinateShell { .. }, _) => (b, a),
            _ => return Err(unsupported("only a Reinhardt domain cut by a coordinate shell is registered")),
        },
        _ => return Err(unsupported("expected exactly two parts")),
    };
    let DomainKind::CoordinateShell { coord: 0, inner_radius, .. } = shell.kind() else {
        return Err(unsupported("the shell must constrain the first coordinate"));
    };
    if *inner_radius <= 0.0 {
        let mut m = build_kernel(base, opts)?;
        m.domain = domain.clone();
        return Ok(m);
    }
    let (profile, a2, m) = match base.kind() {
        DomainKind::Egg { n: 2, exponent } => (Profile::Egg { m: exponent / 2 }, 1.0, exponent / 2),
        DomainKind::Ball(2) => (Profile::BallType { a: vec![1.0, 1.0] }, 1.0, 1),
        DomainKind::Ellipsoid(a) if a.len() == 2 && a[0] == 1.0 => (Profile::BallType { a: a.clone() }, a[1], 1),
        _ => return Err(unsupported("base must be Egg(2,2m), Ball(2) or Ellipsoid(1,a2)")),
    };
    if *inner_radius >= 1.0 {
        return Err(unsupported("the shell misses the domain"));
    }
    let shell_profile = ShellProfile::new(profile, a2, m, *inner_radius, opts.shell_terms, opts.shell_terms);
    Ok(KernelModel::from_parts(
        domain.clone(),
        KernelMode::ClosedForm,
        Repr::Profile(Profile::Shell(Box::new(shell_profile))),
        opts,
    ))
}

impl KernelModel {
    fn from_parts(domain: Domain, mode: KernelMode, repr: Repr, opts: &KernelOptions) -> Self {
        let trust_margin = opts.trust_margin.unwrap_or(match mode {
            KernelMode::Series => SERIES_TRUST_MARGIN,
            KernelMode::ClosedForm => CLOSED_FORM_TRUST_MARGIN,
        });
        Self { domain, mode, repr, degree: None, moments: None, trust_margin }
    }

    /// Kernel of `A(base)` from the transformation rule
    /// `K_{A(D)}(w, w') = K_D(A^{-1} w, A^{-1} w') / |det A|^2`.
    pub fn affine_pullback(image: Domain, map: &AffineMap, base: KernelModel) -> Self {
        let inv = map.inverse();
        let inv_det_abs2 = inv.det().norm_sqr();
        Self {
            domain: image,
            mode: base.mode,
            degree: base.degree,
            moments: base.moments,
            trust_margin: base.trust_margin,
            repr: Repr::Affine { inv, inv_det_abs2, base: Box::new(base) },
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn moment_source(&self) -> Option<MomentSource> {
        self.moments
    }

    pub fn trust_margin(&self) -> f64 {
        self.trust_margin
    }

    pub fn with_trust_margin(mut self, margin: f64) -> Self {
        self.trust_margin = margin;
        self
    }

    /// The profile of a Reinhardt model, if the model is one.
    pub fn profile(&self) -> Option<&Profile> {
        match &self.repr {
            Repr::Profile(p) => Some(p),
            _ => None,
        }
    }

    /// Whether `z` lies in the region where the model is trusted.
    pub fn trusted(&self, z: &[C64]) -> bool {
        if !self.domain.membership(z) {
            return false;
        }
        if self.domain.proximity(z) < self.trust_margin {
            return false;
        }
        match &self.repr {
            Repr::Profile(Profile::Shell(s)) => {
                let x: Vec<C64> = z.iter().map(|c| C64::new(c.norm_sqr(), 0.0)).collect();
                s.resolves(&x)
            }
            _ => true,
        }
    }

    fn check_inside(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::InvalidArgument(format!("expected a point of C^{}", self.dim())));
        }
        if !self.domain.membership(z) {
            return Err(Error::OutsideDomain { domain: self.domain.label().to_string() });
        }
        Ok(())
    }

    pub fn kernel_eval(&self, z: &[C64], w: &[C64]) -> Result<KernelValue> {
        self.check_inside(z)?;
        self.check_inside(w)?;
        let zeta: Vec<C64> = w.iter().map(|c| c.conj()).collect();
        let mut value = self.value_inner(z, &zeta);
        if z == w {
            value = C64::new(value.re, 0.0);
        }
        Ok(KernelValue { value, warning: !(self.trusted(z) && self.trusted(w)) })
    }

    /// Diagonal value `K(z, z)` without membership checks.
    pub fn diagonal(&self, z: &[C64]) -> f64 {
        let zeta: Vec<C64> = z.iter().map(|c| c.conj()).collect();
        self.value_inner(z, &zeta).re
    }

    pub fn kernel_derivatives(&self, z: &[C64], w: &[C64]) -> Result<KernelDerivatives> {
        self.check_inside(z)?;
        self.check_inside(w)?;
        Ok(KernelDerivatives { n: self.dim(), jet: self.jet_at(z, w) })
    }

    /// Third-order jet of `K` in `(z, ζ)` around `(z, conj w)`, without
    /// membership checks. Variables `0..n` are `z`, `n..2n` are `ζ`.
    pub fn jet_at(&self, z: &[C64], w: &[C64]) -> Jet {
        let n = self.dim();
        let nv = 2 * n;
        let zj: Vec<Jet> = (0..n).map(|k| Jet::variable(nv, k, z[k])).collect();
        let zetaj: Vec<Jet> = (0..n).map(|k| Jet::variable(nv, n + k, w[k].conj())).collect();
        self.jet_inner(&zj, &zetaj)
    }

    fn value_inner(&self, z: &[C64], zeta: &[C64]) -> C64 {
        match &self.repr {
            Repr::Profile(p) => {
                let x: Vec<C64> = z.iter().zip(zeta).map(|(a, b)| a * b).collect();
                p.value(&x)
            }
            Repr::Charted { chart, inner } => {
                inner.value_inner(&chart.forward(z), &chart.forward(zeta))
                    * chart.jacobian_det(z)
                    * chart.jacobian_det(zeta)
            }
            Repr::Affine { inv, inv_det_abs2, base } => {
                let zb = inv.apply(z);
                let conj_w: Vec<C64> = zeta.iter().map(|c| c.conj()).collect();
                let zetab: Vec<C64> = inv.apply(&conj_w).iter().map(|c| c.conj()).collect();
                base.value_inner(&zb, &zetab) * *inv_det_abs2
            }
            Repr::Product(parts) => {
                let mut off = 0;
                let mut acc = C64::new(1.0, 0.0);
                for p in parts {
                    let k = p.dim();
                    acc *= p.value_inner(&z[off..off + k], &zeta[off..off + k]);
                    off += k;
                }
                acc
            }
        }
    }

    fn jet_inner(&self, z: &[Jet], zeta: &[Jet]) -> Jet {
        match &self.repr {
            Repr::Profile(p) => {
                let x: Vec<Jet> = z.iter().zip(zeta).map(|(a, b)| *a * *b).collect();
                p.jet(&x)
            }
            Repr::Charted { chart, inner } => {
                inner.jet_inner(&chart.forward_jets(z), &chart.forward_jets(zeta))
                    * chart.jacobian_det_jet(z)
                    * chart.jacobian_det_jet(zeta)
            }
            Repr::Affine { inv, inv_det_abs2, base } => {
                base.jet_inner(&inv.apply_jets(z), &inv.apply_conj_jets(zeta)) * *inv_det_abs2
            }
            Repr::Product(parts) => {
                let mut off = 0;
                let mut acc = Jet::constant(z[0].nvars(), C64::new(1.0, 0.0));
                for p in parts {
                    let k = p.dim();
                    acc *= p.jet_inner(&z[off..off + k], &zeta[off..off + k]);
                    off += k;
                }
                acc
            }
        }
    }

    /// Coefficient `c_α` of `z^α conj(w)^α` in the kernel expansion, for
    /// Reinhardt models.
    pub fn series_coefficient(&self, alpha: &[u32]) -> Option<f64> {
        match &self.repr {
            Repr::Profile(Profile::Series(s)) => {
                let a: Vec<i32> = alpha.iter().map(|&e| e as i32).collect();
                Some(s.terms().iter().find(|(e, _)| *e == a).map(|(_, c)| *c).unwrap_or(0.0))
            }
            Repr::Profile(Profile::Shell(_)) => None,
            Repr::Profile(_) => exact_moment(&self.domain, alpha).map(|m| 1.0 / m),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{c, real_point};
    use std::f64::consts::PI;

    #[test]
    fn center_values() {
        let disc = build_kernel(&Domain::disc(), &KernelOptions::default()).unwrap();
        assert!((disc.kernel_eval(&[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap().value.re - 1.0 / PI).abs() < 1e-15);
        let v = disc.kernel_eval(&[c(0.5, 0.0)], &[c(0.5, 0.0)]).unwrap().value.re;
        assert!((v - 16.0 / (9.0 * PI)).abs() < 1e-14);
        let ball = build_kernel(&Domain::ball(2), &KernelOptions::default()).unwrap();
        let z = real_point(&[0.0, 0.0]);
        assert!((ball.kernel_eval(&z, &z).unwrap().value.re - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!(matches!(disc.kernel_eval(&[c(1.5, 0.0)], &[c(0.0, 0.0)]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn disc_mixed_derivative_at_origin() {
        let disc = build_kernel(&Domain::disc(), &KernelOptions::default()).unwrap();
        let d = disc.kernel_derivatives(&[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap();
        assert!((d.get(&[1], &[1]).unwrap().re - 2.0 / PI).abs() < 1e-14);
        assert_eq!(d.get(&[0], &[0]).unwrap(), d.value());
        assert!(d.get(&[2], &[2]).is_none());
    }

    #[test]
    fn half_plane_diagonal() {
        let hp = build_kernel(&Domain::half_plane(), &KernelOptions::default()).unwrap();
        for x in [-0.3, -1.0, -4.0] {
            let z = [c(x, 0.7)];
            let v = hp.kernel_eval(&z, &z).unwrap().value.re;
            let exact = 1.0 / (4.0 * PI * x * x);
            assert!((v - exact).abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn siegel_kernel_matches_closed_form() {
        // K_Σ(z,z) = (n!/π^n) (-(2 Re z1 + |z'|^2))^{-(n+1)}
        let s = build_kernel(&Domain::siegel(2), &KernelOptions::default()).unwrap();
        let z = [c(-0.8, 0.3), c(0.4, -0.2)];
        let r = -(2.0 * z[0].re + z[1].norm_sqr());
        let exact = 2.0 / (PI * PI) * r.powi(-3);
        let v = s.kernel_eval(&z, &z).unwrap().value.re;
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn egg_closed_form_matches_series() {
        let egg = Domain::egg(2, 4);
        let closed = build_kernel(&egg, &KernelOptions::default()).unwrap();
        let series = build_kernel(&egg, &KernelOptions::series(60)).unwrap();
        let z = [c(0.3, 0.1), c(0.2, -0.3)];
        let w = [c(-0.2, 0.25), c(0.1, 0.3)];
        let a = closed.kernel_eval(&z, &w).unwrap().value;
        let b = series.kernel_eval(&z, &w).unwrap().value;
        assert!((a - b).norm() < 1e-12 * a.norm(), "{a} vs {b}");
        let ja = closed.jet_at(&z, &w);
        let jb = series.jet_at(&z, &w);
        for (x, y) in ja.coeffs().iter().zip(jb.coeffs()) {
            assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn shell_kernel_matches_direct_laurent_sum() {
        // ellipsoid {|z1|^2 + 2|z2|^2 < 1} cut by |z1| > 0.5
        let base = Domain::ellipsoid(vec![1.0, 2.0]);
        let dom = Domain::intersection(vec![base, Domain::coordinate_shell(2, 0, 0.5)]);
        let model = build_kernel(&dom, &KernelOptions::default()).unwrap();
        let z = [c(0.8, 0.1), c(0.1, 0.05)];
        let got = model.kernel_eval(&z, &z).unwrap().value.re;
        let (x, y) = (z[0].norm_sqr(), z[1].norm_sqr());
        let big_a = 0.25f64;
        let mut direct = 0.0;
        for k in -200i32..=200 {
            for b in 0..=120i32 {
                let c = (b + 1) as f64;
                let integral = crate::quadrature::tanh_sinh(|s| s.powi(k) * (1.0 - s).powf(c), big_a, 1.0, 1e-14);
                let m = PI * PI / (c * 2f64.powf(c)) * integral;
                let term = x.powi(k) * y.powi(b) / m;
                direct += term;
                if term.abs() < 1e-20 * direct.abs() && b > 3 {
                    break;
                }
            }
        }
        assert!((got - direct).abs() < 1e-11 * direct, "{got} vs {direct}");
    }
}
