//! Monomial moments `M(α) = ∫ |z^α|^2 dλ` of Reinhardt domains.

use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::quadrature::ScrambledHalton;
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Environment variable naming the directory used to cache moment tables.
pub const CACHE_ENV: &str = "BERGMAN_MOMENT_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MomentSource {
    ClosedFormBeta,
    Quadrature { nodes: u64, seed: u64 },
}

impl MomentSource {
    pub fn tag(&self) -> String {
        match self {
            MomentSource::ClosedFormBeta => "beta".into(),
            MomentSource::Quadrature { nodes, seed } => format!("qmc:{nodes}:{seed}"),
        }
    }

    pub fn parse_tag(tag: &str) -> Option<Self> {
        let parts: Vec<&str> = tag.split(':').collect();
        match parts.as_slice() {
            ["beta"] => Some(MomentSource::ClosedFormBeta),
            ["qmc", n, s] => Some(MomentSource::Quadrature { nodes: n.parse().ok()?, seed: s.parse().ok()? }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    n: usize,
    entries: BTreeMap<Vec<u32>, (f64, MomentSource)>,
}

impl MomentTable {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, alpha: Vec<u32>, value: f64, source: MomentSource) -> Result<()> {
        if alpha.len() != self.n {
            return Err(Error::InvalidArgument(format!("exponent {alpha:?} has wrong length")));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment {value} for {alpha:?} must be positive")));
        }
        self.entries.insert(alpha, (value, source));
        Ok(())
    }

    pub fn get(&self, alpha: &[u32]) -> Option<f64> {
        self.entries.get(alpha).map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, f64, MomentSource)> {
        self.entries.iter().map(|(k, v)| (k, v.0, v.1))
    }

    /// One record per line: `a1,a2,... value tag`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# moments n={}\n", self.n);
        for (a, (v, src)) in &self.entries {
            let exps: Vec<String> = a.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "{} {:e} {}", exps.join(","), v, src.tag());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut table: Option<MomentTable> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |reason: &str| Error::MomentTableParse { line: line_no, reason: reason.to_string() };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("moments n=") {
                    let n = n.trim().parse().map_err(|_| bad("bad dimension header"))?;
                    table = Some(MomentTable::new(n));
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad("expected `exponents value tag`"));
            }
            let alpha: Vec<u32> = fields[0]
                .split(',')
                .map(|e| e.parse().map_err(|_| bad("bad exponent")))
                .collect::<Result<_>>()?;
            let value: f64 = fields[1].parse().map_err(|_| bad("bad value"))?;
            let src = MomentSource::parse_tag(fields[2]).ok_or_else(|| bad("bad provenance tag"))?;
            let t = table.get_or_insert_with(|| MomentTable::new(alpha.len()));
            t.insert(alpha, value, src).map_err(|e| bad(&e.to_string()))?;
        }
        table.ok_or(Error::MomentTableParse { line: 0, reason: "empty table".into() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// `(a_k, p_k)` for domains `{Σ a_k |z_k|^{2 p_k} < 1}`.
fn power_weights(domain: &Domain) -> Option<Vec<(f64, f64)>> {
    match domain.kind() {
        DomainKind::Disc => Some(vec![(1.0, 1.0)]),
        DomainKind::Ball(n) => Some(vec![(1.0, 1.0); *n]),
        DomainKind::Ellipsoid(a) => Some(a.iter().map(|&a| (a, 1.0)).collect()),
        DomainKind::Egg { n, exponent } => {
            let mut w = vec![(1.0, 1.0); *n];
            w[n - 1].1 = *exponent as f64 / 2.0;
            Some(w)
        }
        _ => None,
    }
}

/// Whether monomials form an orthogonal basis whose moments are known in
/// closed form.
pub fn has_exact_moments(domain: &Domain) -> bool {
    matches!(domain.kind(), DomainKind::Polydisc(_)) || power_weights(domain).is_some()
}

/// Closed-form moment from the Beta/Gamma integral.
pub fn exact_moment(domain: &Domain, alpha: &[u32]) -> Option<f64> {
    if let DomainKind::Polydisc(_) = domain.kind() {
        return Some(alpha.iter().map(|&a| PI / (a as f64 + 1.0)).product());
    }
    let w = power_weights(domain)?;
    let n = w.len();
    let mut ln_m = n as f64 * PI.ln();
    let mut total = 0.0;
    for (&a, &(coef, p)) in alpha.iter().zip(&w) {
        let e = (a as f64 + 1.0) / p;
        ln_m += ln_gamma(e) - p.ln() - e * coef.ln();
        total += e;
    }
    ln_m -= ln_gamma(1.0 + total);
    Some(ln_m.exp())
}

/// All exponents with total degree at most `degree`, graded then lexicographic.
pub fn exponents_up_to(n: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree as u32 {
        rec(n, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Box-rejection quasi-Monte Carlo estimates of several moments at once.
pub fn quadrature_moments(domain: &Domain, alphas: &[Vec<u32>], nodes: u64, seed: u64) -> Result<Vec<f64>> {
    let bbox = domain
        .bounding_box()
        .ok_or_else(|| Error::QuadratureUnavailable(format!("`{}` has no bounding box", domain.label())))?;
    let dim = bbox.len();
    let n = dim / 2;
    let vol: f64 = bbox.iter().map(|(l, h)| h - l).product();
    let seq = ScrambledHalton::new(dim, Some(seed));
    let maxe: Vec<u32> = (0..n).map(|k| alphas.iter().map(|a| a[k]).max().unwrap_or(0)).collect();
    let mut sums = vec![0.0f64; alphas.len()];
    let mut u = vec![0.0; dim];
    let mut z = vec![crate::jet::C64::new(0.0, 0.0); n];
    let mut pows: Vec<Vec<f64>> = maxe.iter().map(|&m| vec![0.0; m as usize + 1]).collect();
    for i in 0..nodes {
        seq.point(i, &mut u);
        for k in 0..n {
            let (l0, h0) = bbox[2 * k];
            let (l1, h1) = bbox[2 * k + 1];
            z[k] = crate::jet::C64::new(l0 + (h0 - l0) * u[2 * k], l1 + (h1 - l1) * u[2 * k + 1]);
        }
        if !domain.membership(&z) {
            continue;
        }
        for k in 0..n {
            let r2 = z[k].norm_sqr();
            let mut p = 1.0;
            for slot in pows[k].iter_mut() {
                *slot = p;
                p *= r2;
            }
        }
        for (s, a) in sums.iter_mut().zip(alphas) {
            *s += a.iter().enumerate().map(|(k, &e)| pows[k][e as usize]).product::<f64>();
        }
    }
    Ok(sums.into_iter().map(|s| s * vol / nodes as f64).collect())
}

fn cache_path(domain: &Domain, degree: usize, source: MomentSource) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let name: String = format!("{}-d{}-{}.txt", domain.label(), degree, source.tag())
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    Some(PathBuf::from(dir).join(name))
}

/// Moments of all monomials of degree at most `degree`, read from the cache
/// directory when present.
pub fn build_moment_table(domain: &Domain, degree: usize, source: MomentSource) -> Result<MomentTable> {
    let n = domain.dim();
    let alphas = exponents_up_to(n, degree);
    let cache = cache_path(domain, degree, source);
    if let Some(path) = &cache {
        if path.exists() {
            let t = MomentTable::load(path)?;
            if t.dim() == n && alphas.iter().all(|a| t.get(a).is_some()) {
                return Ok(t);
            }
        }
    }
    let values = match source {
        MomentSource::ClosedFormBeta => alphas
            .iter()
            .map(|a| exact_moment(domain, a).ok_or_else(|| Error::UnsupportedDomain(domain.label().to_string())))
            .collect::<Result<Vec<_>>>()?,
        MomentSource::Quadrature { nodes, seed } => quadrature_moments(domain, &alphas, nodes, seed)?,
    };
    let mut table = MomentTable::new(n);
    for (a, v) in alphas.into_iter().zip(values) {
        if v <= 0.0 {
            return Err(Error::QuadratureUnavailable(format!("no quadrature node hit the support of z^{a:?}")));
        }
        table.insert(a, v, source)?;
    }
    if let Some(path) = cache {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        table.save(&path)?;
    }
    Ok(table)
}
