//! Catalogue of bounded and model domains, their defining functions,
//! membership and boundary-distance queries, and Cayley normal forms.

mod affine;
mod cayley;

pub use affine::AffineMap;
pub use cayley::{cayley, CayleyChart, ChartKind};

use crate::error::{Error, Result};
use crate::jet::C64;
use crate::points::{from_real, norm, real_norm, to_real};
use crate::quadrature::sphere_directions;
use std::sync::LazyLock;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One monomial `coef · z'^holo · conj(z')^anti` of a model polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coef: C64,
    pub holo: Vec<u32>,
    pub anti: Vec<u32>,
}

/// Real polynomial `P(z')` in the tangential variables, stored as
/// `Re Σ coef · z'^α conj(z')^β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPolynomial {
    pub tangential_dim: usize,
    pub terms: Vec<MonomialTerm>,
}

impl ModelPolynomial {
    /// `P(z') = Σ_k |z'_k|^{exponents[k]}` with even exponents.
    pub fn power_sum(exponents: &[u32]) -> Self {
        let d = exponents.len();
        let terms = exponents
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                assert!(e % 2 == 0 && e > 0, "exponents must be even and positive");
                let mut holo = vec![0; d];
                let mut anti = vec![0; d];
                holo[k] = e / 2;
                anti[k] = e / 2;
                MonomialTerm { coef: C64::new(1.0, 0.0), holo, anti }
            })
            .collect();
        Self { tangential_dim: d, terms }
    }

    pub fn eval(&self, zt: &[C64]) -> f64 {
        self.terms.iter().map(|t| (t.coef * mono(zt, &t.holo) * mono_conj(zt, &t.anti)).re).sum()
    }

    /// `∂P/∂z'_k`.
    pub fn dz(&self, zt: &[C64]) -> Vec<C64> {
        let d = self.tangential_dim;
        let mut out = vec![C64::new(0.0, 0.0); d];
        for t in &self.terms {
            for k in 0..d {
                // ∂ Re S / ∂z = (∂S/∂z + conj(∂S/∂z̄)) / 2
                let mut ds = C64::new(0.0, 0.0);
                if t.holo[k] > 0 {
                    let mut h = t.holo.clone();
                    h[k] -= 1;
                    ds += t.coef * t.holo[k] as f64 * mono(zt, &h) * mono_conj(zt, &t.anti);
                }
                let mut dsb = C64::new(0.0, 0.0);
                if t.anti[k] > 0 {
                    let mut a = t.anti.clone();
                    a[k] -= 1;
                    dsb += t.coef * t.anti[k] as f64 * mono(zt, &t.holo) * mono_conj(zt, &a);
                }
                out[k] += 0.5 * (ds + dsb.conj());
            }
        }
        out
    }

    /// True when `P(z') = Σ |z'_k|^2`, i.e. the model is the Siegel domain.
    pub fn is_siegel(&self) -> bool {
        let d = self.tangential_dim;
        let mut seen = vec![false; d];
        for t in &self.terms {
            let k = match (0..d).find(|&k| t.holo[k] == 1 && t.anti[k] == 1) {
                Some(k) => k,
                None => return false,
            };
            let others_zero = (0..d).all(|j| j == k || (t.holo[j] == 0 && t.anti[j] == 0));
            if !others_zero || t.coef != C64::new(1.0, 0.0) || seen[k] {
                return false;
            }
            seen[k] = true;
        }
        seen.iter().all(|&s| s)
    }
}

fn mono(z: &[C64], e: &[u32]) -> C64 {
    z.iter().zip(e).fold(C64::new(1.0, 0.0), |acc, (zi, &k)| acc * zi.powu(k))
}

fn mono_conj(z: &[C64], e: &[u32]) -> C64 {
    z.iter().zip(e).fold(C64::new(1.0, 0.0), |acc, (zi, &k)| acc * zi.conj().powu(k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// `|z| < 1` in `C`.
    Disc,
    /// `|z| < 1` in `C^n`.
    Ball(usize),
    /// `max |z_k| < 1`.
    Polydisc(usize),
    /// `Σ a_k |z_k|^2 < 1`.
    Ellipsoid(Vec<f64>),
    /// `Σ_{k<n} |z_k|^2 + |z_n|^exponent < 1`, exponent even.
    Egg { n: usize, exponent: u32 },
    /// `Re z < 0` (defining function `2 Re z`).
    HalfPlane,
    /// `2 Re z_1 + Σ_{k>1} |z_k|^2 < 0`.
    Siegel(usize),
    /// `2 Re z_1 + P(z') < 0`.
    ModelPolynomial(ModelPolynomial),
    /// Cartesian product, coordinates concatenated in order.
    Product(Vec<Domain>),
    Intersection(Vec<Domain>),
    /// `A(base)`, defining functions `ρ(A^{-1} w) / rho_scale`.
    AffineImage { base: Box<Domain>, map: AffineMap, rho_scale: f64 },
    /// `|z_coord| > inner_radius`, an unbounded neighbourhood of the circle
    /// `|z_coord| = 1`.
    CoordinateShell { n: usize, coord: usize, inner_radius: f64 },
}

/// A region of `C^n` given by finitely many defining functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
    n: usize,
    label: String,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// A defining function value with its holomorphic gradient `∂ρ/∂z`.
#[derive(Clone, Debug)]
pub struct DefiningValue {
    pub value: f64,
    pub dz: Vec<C64>,
}

impl DefiningValue {
    /// Euclidean norm of the real gradient, `2 |∂ρ|`.
    pub fn grad_norm(&self) -> f64 {
        2.0 * norm(&self.dz)
    }

    /// Real gradient in interleaved coordinates.
    pub fn real_grad(&self) -> Vec<f64> {
        self.dz.iter().flat_map(|d| [2.0 * d.re, -2.0 * d.im]).collect()
    }
}

impl Domain {
    fn make(kind: DomainKind, n: usize, label: impl Into<String>) -> Self {
        Self { kind, n, label: label.into() }
    }

    pub fn disc() -> Self {
        Self::make(DomainKind::Disc, 1, "disc")
    }

    pub fn ball(n: usize) -> Self {
        assert!(n >= 1);
        Self::make(DomainKind::Ball(n), n, format!("ball:{n}"))
    }

    pub fn polydisc(n: usize) -> Self {
        assert!(n >= 1);
        let label = if n == 2 { "bidisc".to_string() } else { format!("polydisc:{n}") };
        Self::make(DomainKind::Polydisc(n), n, label)
    }

    pub fn ellipsoid(coeffs: Vec<f64>) -> Self {
        assert!(coeffs.iter().all(|&a| a > 0.0), "ellipsoid coefficients must be positive");
        let label = format!(
            "ellipsoid:{}",
            coeffs.iter().map(|a| format!("{a}")).collect::<Vec<_>>().join(",")
        );
        let n = coeffs.len();
        Self::make(DomainKind::Ellipsoid(coeffs), n, label)
    }

    pub fn egg(n: usize, exponent: u32) -> Self {
        assert!(n >= 2 && exponent >= 2 && exponent % 2 == 0);
        Self::make(DomainKind::Egg { n, exponent }, n, format!("egg:{n}:{exponent}"))
    }

    pub fn half_plane() -> Self {
        Self::make(DomainKind::HalfPlane, 1, "halfplane")
    }

    pub fn siegel(n: usize) -> Self {
        assert!(n >= 2, "use half_plane for n = 1");
        Self::make(DomainKind::Siegel(n), n, format!("siegel:{n}"))
    }

    pub fn model_polynomial(p: ModelPolynomial) -> Self {
        let n = p.tangential_dim + 1;
        let label = format!("model:{n}:{:?}", p.terms.iter().map(|t| t.holo.iter().sum::<u32>() + t.anti.iter().sum::<u32>()).max().unwrap_or(0));
        Self::make(DomainKind::ModelPolynomial(p), n, label)
    }

    pub fn product(factors: Vec<Domain>) -> Self {
        let n = factors.iter().map(|d| d.n).sum();
        let label = format!("product({})", factors.iter().map(|d| d.label.clone()).collect::<Vec<_>>().join("*"));
        Self::make(DomainKind::Product(factors), n, label)
    }

    pub fn intersection(parts: Vec<Domain>) -> Self {
        assert!(!parts.is_empty());
        let n = parts[0].n;
        assert!(parts.iter().all(|d| d.n == n), "intersection parts must share a dimension");
        let label = format!("intersection({})", parts.iter().map(|d| d.label.clone()).collect::<Vec<_>>().join("&"));
        Self::make(DomainKind::Intersection(parts), n, label)
    }

    pub fn affine_image(base: Domain, map: AffineMap, rho_scale: f64) -> Self {
        assert_eq!(base.n, map.dim());
        assert!(rho_scale > 0.0);
        let n = base.n;
        let label = format!("affine({})", base.label);
        Self::make(DomainKind::AffineImage { base: Box::new(base), map, rho_scale }, n, label)
    }

    pub fn coordinate_shell(n: usize, coord: usize, inner_radius: f64) -> Self {
        assert!(coord < n);
        Self::make(
            DomainKind::CoordinateShell { n, coord, inner_radius },
            n,
            format!("shell:{n}:{coord}:{inner_radius}"),
        )
    }

    /// Parses catalogue identifiers such as `disc`, `ball:3`, `bidisc`,
    /// `polydisc:3`, `egg:2:4`, `ellipsoid:1,2`, `halfplane`, `siegel:2`,
    /// `model:2:4`.
    pub fn from_id(id: &str) -> Result<Self> {
        let bad = || Error::UnknownDomainId(id.to_string());
        let parts: Vec<&str> = id.trim().split(':').collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["disc"] => Ok(Self::disc()),
            ["halfplane"] => Ok(Self::half_plane()),
            ["bidisc"] => Ok(Self::polydisc(2)),
            ["ball", n] => match int(n)? {
                0 => Err(bad()),
                n => Ok(Self::ball(n)),
            },
            ["polydisc", n] => match int(n)? {
                0 => Err(bad()),
                n => Ok(Self::polydisc(n)),
            },
            ["siegel", n] => match int(n)? {
                0 => Err(bad()),
                1 => Ok(Self::half_plane()),
                n => Ok(Self::siegel(n)),
            },
            ["egg", n, e] => {
                let (n, e) = (int(n)?, int(e)?);
                if n < 2 || e < 2 || e % 2 != 0 {
                    return Err(bad());
                }
                Ok(Self::egg(n, e as u32))
            }
            ["model", n, e] => {
                let (n, e) = (int(n)?, int(e)?);
                if n < 2 || e < 2 || e % 2 != 0 {
                    return Err(bad());
                }
                let dom = Self::model_polynomial(ModelPolynomial::power_sum(&vec![e as u32; n - 1]));
                Ok(Self { label: id.to_string(), ..dom })
            }
            ["ellipsoid", coeffs] => {
                let a: Vec<f64> = coeffs
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if a.is_empty() || a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(bad());
                }
                Ok(Self::ellipsoid(a))
            }
            _ => Err(bad()),
        }
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            DomainKind::Disc
            | DomainKind::Ball(_)
            | DomainKind::Polydisc(_)
            | DomainKind::Ellipsoid(_)
            | DomainKind::Egg { .. } => true,
            DomainKind::HalfPlane
            | DomainKind::Siegel(_)
            | DomainKind::ModelPolynomial(_)
            | DomainKind::CoordinateShell { .. } => false,
            DomainKind::Product(f) => f.iter().all(Domain::is_bounded),
            DomainKind::Intersection(p) => p.iter().any(Domain::is_bounded),
            DomainKind::AffineImage { base, .. } => base.is_bounded(),
        }
    }

    /// Values and holomorphic gradients of all defining functions.
    pub fn defining(&self, z: &[C64]) -> Vec<DefiningValue> {
        let mut out = Vec::with_capacity(2);
        self.push_defining(z, &mut out);
        out
    }

    fn push_defining(&self, z: &[C64], out: &mut Vec<DefiningValue>) {
        let zero = C64::new(0.0, 0.0);
        match &self.kind {
            DomainKind::Disc | DomainKind::Ball(_) => out.push(DefiningValue {
                value: z.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0,
                dz: z.iter().map(|c| c.conj()).collect(),
            }),
            DomainKind::Polydisc(n) => {
                for k in 0..*n {
                    let mut dz = vec![zero; *n];
                    dz[k] = z[k].conj();
                    out.push(DefiningValue { value: z[k].norm_sqr() - 1.0, dz });
                }
            }
            DomainKind::Ellipsoid(a) => out.push(DefiningValue {
                value: z.iter().zip(a).map(|(c, a)| a * c.norm_sqr()).sum::<f64>() - 1.0,
                dz: z.iter().zip(a).map(|(c, a)| c.conj() * *a).collect(),
            }),
            DomainKind::Egg { n, exponent } => {
                let m = (*exponent / 2) as i32;
                let last = z[n - 1];
                let r2 = last.norm_sqr();
                let mut dz: Vec<C64> = z.iter().map(|c| c.conj()).collect();
                dz[n - 1] = last.conj() * (m as f64) * r2.powi(m - 1);
                out.push(DefiningValue {
                    value: z[..n - 1].iter().map(|c| c.norm_sqr()).sum::<f64>() + r2.powi(m) - 1.0,
                    dz,
                });
            }
            DomainKind::HalfPlane => out.push(DefiningValue { value: 2.0 * z[0].re, dz: vec![C64::new(1.0, 0.0)] }),
            DomainKind::Siegel(_) => {
                let mut dz: Vec<C64> = z.iter().map(|c| c.conj()).collect();
                dz[0] = C64::new(1.0, 0.0);
                out.push(DefiningValue {
                    value: 2.0 * z[0].re + z[1..].iter().map(|c| c.norm_sqr()).sum::<f64>(),
                    dz,
                });
            }
            DomainKind::ModelPolynomial(p) => {
                let mut dz = vec![C64::new(1.0, 0.0)];
                dz.extend(p.dz(&z[1..]));
                out.push(DefiningValue { value: 2.0 * z[0].re + p.eval(&z[1..]), dz });
            }
            DomainKind::Product(factors) => {
                let mut offset = 0;
                for f in factors {
                    let mut sub = Vec::new();
                    f.push_defining(&z[offset..offset + f.n], &mut sub);
                    for s in sub {
                        let mut dz = vec![zero; self.n];
                        dz[offset..offset + f.n].copy_from_slice(&s.dz);
                        out.push(DefiningValue { value: s.value, dz });
                    }
                    offset += f.n;
                }
            }
            DomainKind::Intersection(parts) => {
                for p in parts {
                    p.push_defining(z, out);
                }
            }
            DomainKind::AffineImage { base, map, rho_scale } => {
                // z = B w + c with B the inverse linear part
                let inv = inverse_cached(map);
                let zb = inv.apply(z);
                let mut sub = Vec::new();
                base.push_defining(&zb, &mut sub);
                for s in sub {
                    let dz = (0..self.n)
                        .map(|j| (0..self.n).map(|k| s.dz[k] * inv.entry(k, j)).sum::<C64>() / *rho_scale)
                        .collect();
                    out.push(DefiningValue { value: s.value / rho_scale, dz });
                }
            }
            DomainKind::CoordinateShell { n, coord, inner_radius } => {
                let mut dz = vec![zero; *n];
                dz[*coord] = -z[*coord].conj();
                out.push(DefiningValue { value: inner_radius * inner_radius - z[*coord].norm_sqr(), dz });
            }
        }
    }

    /// Values of the defining functions only.
    pub fn defining_values(&self, z: &[C64]) -> Vec<f64> {
        self.defining(z).into_iter().map(|d| d.value).collect()
    }

    pub fn membership(&self, z: &[C64]) -> bool {
        debug_assert_eq!(z.len(), self.n);
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return false;
        }
        self.contains_fast(z)
    }

    fn contains_fast(&self, z: &[C64]) -> bool {
        match &self.kind {
            DomainKind::Intersection(parts) => parts.iter().all(|p| p.contains_fast(z)),
            DomainKind::AffineImage { base, map, .. } => base.contains_fast(&inverse_cached(map).apply(z)),
            DomainKind::Product(factors) => {
                let mut off = 0;
                factors.iter().all(|f| {
                    let inside = f.contains_fast(&z[off..off + f.n]);
                    off += f.n;
                    inside
                })
            }
            _ => self.defining(z).iter().all(|d| d.value < 0.0),
        }
    }

    /// Cheap first-order estimate `min_i -ρ_i / |∇ρ_i|` of the boundary
    /// distance; negative outside.
    pub fn proximity(&self, z: &[C64]) -> f64 {
        self.defining(z)
            .iter()
            .map(|d| {
                let g = d.grad_norm();
                if g > 0.0 {
                    -d.value / g
                } else if d.value < 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned box in interleaved real coordinates containing the domain.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            DomainKind::Disc | DomainKind::Ball(_) | DomainKind::Polydisc(_) | DomainKind::Egg { .. } => {
                Some(vec![(-1.0, 1.0); 2 * self.n])
            }
            DomainKind::Ellipsoid(a) => {
                Some(a.iter().flat_map(|a| { let r = 1.0 / a.sqrt(); [(-r, r), (-r, r)] }).collect())
            }
            DomainKind::HalfPlane
            | DomainKind::Siegel(_)
            | DomainKind::ModelPolynomial(_)
            | DomainKind::CoordinateShell { .. } => None,
            DomainKind::Product(factors) => {
                let mut out = Vec::new();
                for f in factors {
                    out.extend(f.bounding_box()?);
                }
                Some(out)
            }
            DomainKind::Intersection(parts) => {
                let mut acc: Option<Vec<(f64, f64)>> = None;
                for p in parts {
                    if let Some(b) = p.bounding_box() {
                        acc = Some(match acc {
                            None => b,
                            Some(a) => a.iter().zip(&b).map(|(x, y)| (x.0.max(y.0), x.1.min(y.1))).collect(),
                        });
                    }
                }
                acc
            }
            DomainKind::AffineImage { base, map, .. } => {
                let b = base.bounding_box()?;
                let lin = map.real_linear();
                let shift = to_real(map.shift());
                let dim = 2 * self.n;
                Some(
                    (0..dim)
                        .map(|i| {
                            let (mut lo, mut hi) = (shift[i], shift[i]);
                            for j in 0..dim {
                                let m = lin[(i, j)];
                                let (a, c) = (m * b[j].0, m * b[j].1);
                                lo += a.min(c);
                                hi += a.max(c);
                            }
                            (lo, hi)
                        })
                        .collect(),
                )
            }
        }
    }

    /// Euclidean distance to the boundary.
    pub fn boundary_distance(&self, z: &[C64]) -> Result<f64> {
        self.nearest_boundary_point(z).map(|(d, _)| d)
    }

    /// Euclidean distance to the boundary together with a nearest boundary point.
    pub fn nearest_boundary_point(&self, z: &[C64]) -> Result<(f64, Vec<C64>)> {
        if !self.membership(z) {
            return Err(Error::NotInDomain { domain: self.label.clone() });
        }
        Ok(self.nearest_inner(z))
    }

    fn nearest_inner(&self, z: &[C64]) -> (f64, Vec<C64>) {
        match &self.kind {
            DomainKind::Disc | DomainKind::Ball(_) => {
                let r = norm(z);
                let p = if r > 0.0 {
                    z.iter().map(|c| c / r).collect()
                } else {
                    let mut p = vec![C64::new(0.0, 0.0); self.n];
                    p[0] = C64::new(1.0, 0.0);
                    p
                };
                (1.0 - r, p)
            }
            DomainKind::Polydisc(_) => {
                let (k, r) = z
                    .iter()
                    .enumerate()
                    .map(|(k, c)| (k, c.norm()))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                let mut p = z.to_vec();
                p[k] = if r > 0.0 { z[k] / r } else { C64::new(1.0, 0.0) };
                (1.0 - r, p)
            }
            DomainKind::HalfPlane => (-z[0].re, vec![C64::new(0.0, z[0].im)]),
            DomainKind::Product(factors) => {
                let mut best = (f64::INFINITY, z.to_vec());
                let mut off = 0;
                for f in factors {
                    let (d, p) = f.nearest_inner(&z[off..off + f.n]);
                    if d < best.0 {
                        let mut q = z.to_vec();
                        q[off..off + f.n].copy_from_slice(&p);
                        best = (d, q);
                    }
                    off += f.n;
                }
                best
            }
            _ => self.generic_nearest(z),
        }
    }

    /// Ray sampling over a quasi-uniform direction grid followed by
    /// closest-point refinement on each defining function.
    fn generic_nearest(&self, z: &[C64]) -> (f64, Vec<C64>) {
        let dim = 2 * self.n;
        let x0 = to_real(z);
        let dirs = ray_directions(dim);
        let tmax = match self.bounding_box() {
            Some(b) => b.iter().map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt() * 1.01 + 1e-12,
            None => 1e4 * (1.0 + real_norm(&x0)),
        };
        let n_pieces = self.defining(z).len();
        let mut best = (f64::INFINITY, z.to_vec());
        for piece in 0..n_pieces {
            let rho = |x: &[f64]| self.defining(&from_real(x))[piece].value;
            let mut t_best = f64::INFINITY;
            let mut dir_best: Option<&Vec<f64>> = None;
            let tmin = 1e-13 * (1.0 + real_norm(&x0));
            let steps = 64;
            let ratio = (tmax / tmin).powf(1.0 / steps as f64);
            let mut x = vec![0.0; dim];
            for u in dirs.iter() {
                let mut lo = 0.0;
                let mut t = tmin;
                let mut hi = None;
                for _ in 0..=steps {
                    if t >= t_best {
                        break;
                    }
                    for i in 0..dim {
                        x[i] = x0[i] + t * u[i];
                    }
                    if rho(&x) >= 0.0 {
                        hi = Some(t);
                        break;
                    }
                    lo = t;
                    t *= ratio;
                }
                let Some(mut hi) = hi else { continue };
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    for i in 0..dim {
                        x[i] = x0[i] + mid * u[i];
                    }
                    if rho(&x) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                if hi < t_best {
                    t_best = hi;
                    dir_best = Some(u);
                }
            }
            let Some(u) = dir_best else { continue };
            let start: Vec<f64> = (0..dim).map(|i| x0[i] + t_best * u[i]).collect();
            let (d, p) = self.refine_closest(&x0, start, piece);
            if d < best.0 {
                best = (d, from_real(&p));
            }
        }
        best
    }

    fn refine_closest(&self, x0: &[f64], start: Vec<f64>, piece: usize) -> (f64, Vec<f64>) {
        let dim = x0.len();
        let eval = |x: &[f64]| {
            let d = &self.defining(&from_real(x))[piece];
            (d.value, d.real_grad())
        };
        let project = |mut y: Vec<f64>| -> Vec<f64> {
            for _ in 0..50 {
                let (v, g) = eval(&y);
                let g2: f64 = g.iter().map(|a| a * a).sum();
                if g2 == 0.0 {
                    break;
                }
                let step = v / g2;
                for i in 0..dim {
                    y[i] -= step * g[i];
                }
                if (step * g2.sqrt()).abs() < 1e-15 * (1.0 + real_norm(&y)) {
                    break;
                }
            }
            y
        };
        let dist = |x: &[f64]| x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let mut x = project(start);
        let mut best = (dist(&x), x.clone());
        for _ in 0..200 {
            let (_, g) = eval(&x);
            let gn = real_norm(&g);
            if gn == 0.0 {
                break;
            }
            let nrm: Vec<f64> = g.iter().map(|a| a / gn).collect();
            let along: f64 = (0..dim).map(|i| (x[i] - x0[i]) * nrm[i]).sum();
            let y: Vec<f64> = (0..dim).map(|i| x0[i] + along * nrm[i]).collect();
            let next = project(y);
            let d = dist(&next);
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            x = next;
            if d < best.0 {
                best = (d, x.clone());
            }
            if moved < 1e-14 * (1.0 + d) {
                break;
            }
        }
        best
    }
}

static RAY_DIRS: LazyLock<Vec<Vec<Vec<f64>>>> =
    LazyLock::new(|| (0..=6).map(|d| if d < 2 { Vec::new() } else { sphere_directions(d, 4096) }).collect());

fn ray_directions(dim: usize) -> &'static [Vec<f64>] {
    &RAY_DIRS[dim]
}

fn inverse_cached(map: &AffineMap) -> AffineMap {
    map.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::real_point;

    #[test]
    fn membership_examples() {
        assert!(Domain::ball(2).membership(&real_point(&[0.0, 0.0])));
        assert!(!Domain::half_plane().membership(&real_point(&[0.1])));
        // 0.81 + 0.2401 = 1.0501 >= 1
        assert!(!Domain::egg(2, 4).membership(&real_point(&[0.9, 0.7])));
        assert!(Domain::egg(2, 4).membership(&real_point(&[0.9, 0.6])));
    }

    #[test]
    fn exact_boundary_distances() {
        assert_eq!(Domain::ball(2).boundary_distance(&real_point(&[0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(Domain::polydisc(2).boundary_distance(&real_point(&[0.5, 0.0])).unwrap(), 0.5);
        assert!(matches!(
            Domain::disc().boundary_distance(&real_point(&[1.5])),
            Err(Error::NotInDomain { .. })
        ));
    }

    #[test]
    fn egg_boundary_distance_matches_parametric_oracle() {
        // boundary of the real slice: (sqrt(1 - t^4), t); nearest point is in
        // the real plane by the rotational symmetry of each coordinate
        let target = (0.5f64, 0.5f64);
        let f = |t: f64| {
            let x = (1.0 - t.powi(4)).max(0.0).sqrt();
            ((x - target.0).powi(2) + (t - target.1).powi(2)).sqrt()
        };
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=200_000 {
            let t = k as f64 / 200_000.0;
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        let (mut a, mut b) = (best.1 - 1e-5, best.1 + 1e-5);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if f(m1) < f(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let oracle = f(0.5 * (a + b));
        let got = Domain::egg(2, 4).boundary_distance(&real_point(&[0.5, 0.5])).unwrap();
        assert!((got - oracle).abs() < 1e-8 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn ids_round_trip() {
        for id in ["disc", "ball:3", "bidisc", "polydisc:3", "egg:2:4", "halfplane", "siegel:2", "ellipsoid:1,2", "model:2:4"] {
            let d = Domain::from_id(id).unwrap();
            assert_eq!(d.label(), id);
        }
        for bad in ["ball", "ball:x", "egg:2:3", "sphere", "ellipsoid:1,-2"] {
            assert!(Domain::from_id(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn affine_image_bounding_box_contains_image() {
        let map = AffineMap::diagonal_about(&real_point(&[1.0, 0.0]), &[C64::new(10.0, 0.0), C64::new(3.0, 0.0)]);
        let d = Domain::affine_image(Domain::ellipsoid(vec![1.0, 2.0]), map, 0.1);
        let bb = d.bounding_box().unwrap();
        assert!(bb[0].0 <= -20.0 + 1e-9 && bb[0].1 >= -1e-9);
        assert!(d.membership(&real_point(&[-1.0, 0.0])));
        assert!(!d.membership(&real_point(&[0.5, 0.0])));
    }
}
