use super::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::jet::{Jet, C64};
use std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    Identity,
    /// `z ↦ (1+z)/(1−z)`, `{Re z < 0} → disc`.
    HalfPlane,
    /// `z ↦ ((1+z₁)/(1−z₁), √2 z'/(1−z₁))`, `Σ → Bⁿ`.
    Siegel(usize),
    Product(Vec<CayleyChart>),
}

/// Biholomorphism from a (possibly unbounded) domain onto a bounded
/// representative. All charts have real Taylor coefficients, so the same
/// formulas apply to conjugated arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct CayleyChart {
    kind: ChartKind,
    source: Domain,
    target: Domain,
}

/// Registered chart for `domain`.
pub fn cayley(domain: &Domain) -> Result<CayleyChart> {
    let chart = |kind, target| Ok(CayleyChart { kind, source: domain.clone(), target });
    match domain.kind() {
        DomainKind::Disc
        | DomainKind::Ball(_)
        | DomainKind::Polydisc(_)
        | DomainKind::Ellipsoid(_)
        | DomainKind::Egg { .. } => chart(ChartKind::Identity, domain.clone()),
        DomainKind::HalfPlane => chart(ChartKind::HalfPlane, Domain::disc()),
        DomainKind::Siegel(n) => chart(ChartKind::Siegel(*n), Domain::ball(*n)),
        DomainKind::ModelPolynomial(p) if p.is_siegel() => {
            let n = p.tangential_dim + 1;
            chart(ChartKind::Siegel(n), Domain::ball(n))
        }
        DomainKind::Product(factors) => {
            let charts = factors.iter().map(cayley).collect::<Result<Vec<_>>>()?;
            let target = Domain::product(charts.iter().map(|c| c.target.clone()).collect());
            chart(ChartKind::Product(charts), target)
        }
        _ => Err(Error::NoChart(domain.label().to_string())),
    }
}

impl CayleyChart {
    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn source(&self) -> &Domain {
        &self.source
    }

    pub fn target(&self) -> &Domain {
        &self.target
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ChartKind::Identity)
    }

    pub fn forward(&self, z: &[C64]) -> Vec<C64> {
        let one = C64::new(1.0, 0.0);
        match &self.kind {
            ChartKind::Identity => z.to_vec(),
            ChartKind::HalfPlane => vec![(one + z[0]) / (one - z[0])],
            ChartKind::Siegel(_) => {
                let d = one - z[0];
                let mut f = vec![(one + z[0]) / d];
                f.extend(z[1..].iter().map(|c| c * SQRT_2 / d));
                f
            }
            ChartKind::Product(charts) => split_apply(charts, z, |c, s| c.forward(s)),
        }
    }

    pub fn inverse(&self, w: &[C64]) -> Vec<C64> {
        let one = C64::new(1.0, 0.0);
        match &self.kind {
            ChartKind::Identity => w.to_vec(),
            ChartKind::HalfPlane => vec![(w[0] - one) / (w[0] + one)],
            ChartKind::Siegel(_) => {
                let d = one + w[0];
                let mut z = vec![(w[0] - one) / d];
                z.extend(w[1..].iter().map(|c| c * SQRT_2 / d));
                z
            }
            ChartKind::Product(charts) => split_apply(charts, w, |c, s| c.inverse(s)),
        }
    }

    /// Complex Jacobian determinant of `forward` at `z`.
    pub fn jacobian_det(&self, z: &[C64]) -> C64 {
        let one = C64::new(1.0, 0.0);
        match &self.kind {
            ChartKind::Identity => one,
            ChartKind::HalfPlane => 2.0 / ((one - z[0]) * (one - z[0])),
            ChartKind::Siegel(n) => {
                2.0 * SQRT_2.powi(*n as i32 - 1) / (one - z[0]).powu(*n as u32 + 1)
            }
            ChartKind::Product(charts) => {
                let mut off = 0;
                charts
                    .iter()
                    .map(|c| {
                        let k = c.source.dim();
                        let d = c.jacobian_det(&z[off..off + k]);
                        off += k;
                        d
                    })
                    .product()
            }
        }
    }

    pub fn forward_jets(&self, z: &[Jet]) -> Vec<Jet> {
        match &self.kind {
            ChartKind::Identity => z.to_vec(),
            ChartKind::HalfPlane => {
                let one = C64::new(1.0, 0.0);
                vec![z[0].add_const(one) * (-z[0]).add_const(one).recip()]
            }
            ChartKind::Siegel(_) => {
                let one = C64::new(1.0, 0.0);
                let inv = (-z[0]).add_const(one).recip();
                let mut f = vec![z[0].add_const(one) * inv];
                f.extend(z[1..].iter().map(|c| *c * inv * SQRT_2));
                f
            }
            ChartKind::Product(charts) => split_apply(charts, z, |c, s| c.forward_jets(s)),
        }
    }

    pub fn jacobian_det_jet(&self, z: &[Jet]) -> Jet {
        let one = C64::new(1.0, 0.0);
        let nv = z[0].nvars();
        match &self.kind {
            ChartKind::Identity => Jet::constant(nv, one),
            ChartKind::HalfPlane => (-z[0]).add_const(one).powi(-2) * 2.0,
            ChartKind::Siegel(n) => (-z[0]).add_const(one).powi(-(*n as i32 + 1)) * (2.0 * SQRT_2.powi(*n as i32 - 1)),
            ChartKind::Product(charts) => {
                let mut off = 0;
                let mut acc = Jet::constant(nv, one);
                for c in charts {
                    let k = c.source.dim();
                    acc *= c.jacobian_det_jet(&z[off..off + k]);
                    off += k;
                }
                acc
            }
        }
    }
}

fn split_apply<T: Clone>(charts: &[CayleyChart], z: &[T], f: impl Fn(&CayleyChart, &[T]) -> Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(z.len());
    let mut off = 0;
    for c in charts {
        let k = c.source.dim();
        out.extend(f(c, &z[off..off + k]));
        off += k;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{c, dist};

    #[test]
    fn fixed_values() {
        let hp = cayley(&Domain::half_plane()).unwrap();
        assert!(hp.forward(&[c(-1.0, 0.0)])[0].norm() < 1e-15);
        let s = cayley(&Domain::siegel(2)).unwrap();
        let f = s.forward(&[c(-1.0, 0.0), c(0.0, 0.0)]);
        assert!(f.iter().all(|v| v.norm() < 1e-15));
        assert!(cayley(&Domain::disc()).unwrap().is_identity());
        assert!(matches!(cayley(&Domain::from_id("model:2:4").unwrap()), Err(Error::NoChart(_))));
    }

    #[test]
    fn siegel_round_trip_and_jacobian() {
        let s = cayley(&Domain::siegel(3)).unwrap();
        let z = vec![c(-0.7, 0.3), c(0.2, -0.1), c(-0.3, 0.25)];
        assert!(s.source().membership(&z));
        let w = s.forward(&z);
        assert!(s.target().membership(&w));
        assert!(dist(&s.inverse(&w), &z) < 1e-14);
        // determinant by complex finite differences of the forward map
        let h = 1e-6;
        let mut m = nalgebra::DMatrix::<C64>::zeros(3, 3);
        for j in 0..3 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let (fp, fm) = (s.forward(&zp), s.forward(&zm));
            for i in 0..3 {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let fd = m.determinant();
        assert!((fd - s.jacobian_det(&z)).norm() < 1e-8 * fd.norm());
    }
}
