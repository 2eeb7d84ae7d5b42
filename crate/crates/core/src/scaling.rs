//! Scaling sequences (affine normalization followed by anisotropic dilation)
//! and the stability-chain verifier.

use crate::domains::{AffineMap, Domain, DomainKind, ModelPolynomial};
use crate::error::{Error, Result};
use crate::geodesics::{bergman_distance, integrate_real, unit_directions, DistanceOptions, GeodesicOptions};
use crate::jet::C64;
use crate::kernel::{build_kernel, KernelModel, KernelOptions};
use crate::metric::{christoffel, metric_tensor};
use crate::points::{from_real, norm, to_real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub const DEFAULT_DELTAS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const DEFAULT_APERTURE: f64 = PI / 6.0;

/// `δ_j = 10^{-j/2} δ_1` for `j = 1..=count`.
pub fn geometric_ladder(delta1: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| delta1 * 10f64.powf(-(j as f64) / 2.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingClass {
    StronglyPseudoconvex,
    LeviCorankOne,
    BidiscCorner,
}

impl std::str::FromStr for ScalingClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strongly-pseudoconvex" | "spc" => Ok(Self::StronglyPseudoconvex),
            "levi-corank-one" | "levi" => Ok(Self::LeviCorankOne),
            "bidisc-corner" | "corner" => Ok(Self::BidiscCorner),
            other => Err(Error::UnknownClass(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Approach {
    /// Along the inward normal.
    Normal,
    /// Straight line at `angle` from the inward normal, tilted into the
    /// imaginary direction of the complex normal line.
    Cone { aperture: f64, angle: f64 },
    /// Explicit points, checked against the cone of the given aperture.
    Points { aperture: f64, points: Vec<Vec<C64>> },
}

impl Approach {
    pub fn default_cone() -> Self {
        Approach::Cone { aperture: DEFAULT_APERTURE, angle: DEFAULT_APERTURE / 2.0 }
    }
}

/// Normalization data at a boundary point: `w = U (z - p0)` puts the inward
/// normal on `-Re w_1`; `T` normalizes the tangential Levi form; the defining
/// function satisfies `ρ(p0 + v) = 2 |ν| Re w_1 + …`.
struct Frame {
    /// Row-major unitary matrix.
    u: Vec<C64>,
    /// Row-major tangential normalization of size `(n-1)^2`.
    t: Vec<C64>,
    nu: f64,
    weights: Vec<f64>,
    limit: Domain,
    /// One dilation per coordinate block for corners.
    corner: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingSequence {
    pub source: Domain,
    pub p0: Vec<C64>,
    pub approach: Approach,
    pub class: ScalingClass,
    pub weights: Vec<f64>,
    pub deltas: Vec<f64>,
    pub points: Vec<Vec<C64>>,
    /// Composed maps `π^j ∘ N^j`.
    pub maps: Vec<AffineMap>,
    pub scaled: Vec<Domain>,
    pub limit: Domain,
    pub transported: Vec<Vec<C64>>,
}

impl ScalingSequence {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Base point in the limit domain: the last transported point.
    pub fn limit_point(&self) -> &[C64] {
        self.transported.last().expect("nonempty sequence")
    }

    /// Kernel of `D^j` from the transformation rule.
    pub fn scaled_kernel(&self, j: usize, base: &KernelModel) -> KernelModel {
        KernelModel::affine_pullback(self.scaled[j].clone(), &self.maps[j], base.clone())
    }

    pub fn forward(&self, j: usize, z: &[C64]) -> Vec<C64> {
        self.maps[j].apply(z)
    }

    pub fn inverse(&self, j: usize, w: &[C64]) -> Vec<C64> {
        self.maps[j].inverse().apply(w)
    }
}

fn unit_row_basis(first: &[C64]) -> Vec<C64> {
    // rows: first, then Gram-Schmidt on the standard basis
    let n = first.len();
    let mut rows: Vec<Vec<C64>> = vec![first.to_vec()];
    for e in 0..n {
        if rows.len() == n {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[e] = C64::new(1.0, 0.0);
        for r in &rows {
            let p: C64 = r.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for k in 0..n {
                v[k] -= p * r[k];
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            rows.push(v.iter().map(|c| c / nv).collect());
        }
    }
    // row i of U is conj(basis_i) so that (U v)_i = <basis_i, v>
    rows.into_iter().flat_map(|r| r.into_iter().map(|c| c.conj())).collect()
}

fn boundary_frame(domain: &Domain, p0: &[C64], class: ScalingClass) -> Result<Frame> {
    let n = domain.dim();
    let unknown = || Error::UnknownClass(format!("{class:?} scaling is not registered for `{}`", domain.label()));
    let rho = domain.defining(p0);
    if rho.iter().all(|d| d.value.abs() > 1e-10) {
        return Err(Error::InvalidArgument(format!("{p0:?} is not a boundary point of `{}`", domain.label())));
    }
    match (class, domain.kind()) {
        (ScalingClass::StronglyPseudoconvex, DomainKind::Disc | DomainKind::Ball(_) | DomainKind::Ellipsoid(_)) => {
            let a: Vec<f64> = match domain.kind() {
                DomainKind::Ellipsoid(a) => a.clone(),
                _ => vec![1.0; n],
            };
            // ρ = z* A z - 1, ν = A p0
            let nu_vec: Vec<C64> = p0.iter().zip(&a).map(|(z, a)| z * *a).collect();
            let nu = norm(&nu_vec);
            let first: Vec<C64> = nu_vec.iter().map(|c| c / nu).collect();
            let u = unit_row_basis(&first);
            // tangential Levi form: rows 1.. of U applied to A, divided by |ν|
            let m = n - 1;
            let mut levi = nalgebra::DMatrix::<C64>::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    // Ã = U A U*
                    levi[(i, j)] = (0..n).map(|k| u[(i + 1) * n + k] * a[k] * u[(j + 1) * n + k].conj()).sum::<C64>() / nu;
                }
            }
            let t = if m == 0 {
                Vec::new()
            } else {
                let chol = levi.cholesky().ok_or_else(unknown)?;
                let l = chol.l();
                // T* T = Levi with T = L*
                let mut t = Vec::with_capacity(m * m);
                for i in 0..m {
                    for j in 0..m {
                        t.push(l[(j, i)].conj());
                    }
                }
                t
            };
            let mut weights = vec![1.0];
            weights.extend(std::iter::repeat_n(0.5, m));
            let limit = if n == 1 { Domain::half_plane() } else { Domain::siegel(n) };
            Ok(Frame { u, t, nu, weights, limit, corner: false })
        }
        (ScalingClass::LeviCorankOne, DomainKind::Egg { n: 2, exponent }) => {
            if p0[1].norm() > 1e-12 {
                return Err(Error::InvalidArgument("Levi corank one scaling is registered at (e^{iφ}, 0)".into()));
            }
            let phase = p0[0] / p0[0].norm();
            let u = vec![phase.conj(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
            let limit = Domain::model_polynomial(ModelPolynomial::power_sum(&[*exponent]));
            Ok(Frame {
                u,
                t: vec![C64::new(1.0, 0.0)],
                nu: 1.0,
                weights: vec![1.0, 1.0 / *exponent as f64],
                limit,
                corner: false,
            })
        }
        (ScalingClass::BidiscCorner, DomainKind::Polydisc(2)) => {
            if p0.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
                return Err(Error::InvalidArgument("bidisc corner scaling needs |z_1| = |z_2| = 1".into()));
            }
            let u = vec![(p0[0] / p0[0].norm()).conj(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), (p0[1] / p0[1].norm()).conj()];
            let limit = Domain::product(vec![Domain::half_plane(), Domain::half_plane()]).with_label("halfplane^2");
            Ok(Frame { u, t: Vec::new(), nu: 1.0, weights: vec![1.0, 1.0], limit, corner: true })
        }
        _ => Err(unknown()),
    }
}

/// Builds the scaling sequence of `domain` at the boundary point `p0`.
pub fn build_scaling(
    domain: &Domain,
    p0: &[C64],
    approach: &Approach,
    class: ScalingClass,
    deltas: &[f64],
) -> Result<ScalingSequence> {
    let n = domain.dim();
    if p0.len() != n {
        return Err(Error::InvalidArgument(format!("boundary point has {} coordinates, domain has {n}", p0.len())));
    }
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("δ ladder must be positive and strictly decreasing".into()));
    }
    let frame = boundary_frame(domain, p0, class)?;
    let u = AffineMap::new(frame.u.clone(), vec![C64::new(0.0, 0.0); n]);
    let uinv = u.inverse();
    // inward complex normal direction(s) in original coordinates
    let mut points = Vec::with_capacity(deltas.len());
    let mut depths = Vec::with_capacity(deltas.len());
    match approach {
        Approach::Normal | Approach::Cone { .. } => {
            let tilt = match approach {
                Approach::Cone { aperture, angle } => {
                    if angle.abs() > *aperture || *aperture >= PI / 2.0 {
                        return Err(Error::ApproachLeavesCone { index: 0, aperture: *aperture });
                    }
                    angle.tan()
                }
                _ => 0.0,
            };
            for &d in deltas {
                let mut w = vec![C64::new(0.0, 0.0); n];
                let coords = if frame.corner { n } else { 1 };
                for wk in w.iter_mut().take(coords) {
                    *wk = C64::new(-d, -d * tilt);
                }
                let v = uinv.apply(&w);
                points.push(p0.iter().zip(&v).map(|(a, b)| a + b).collect::<Vec<_>>());
                depths.push(d);
            }
        }
        Approach::Points { aperture, points: pts } => {
            if pts.len() != deltas.len() {
                return Err(Error::InvalidArgument("need one approach point per δ".into()));
            }
            for (index, p) in pts.iter().enumerate() {
                let v: Vec<C64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
                let w = u.apply(&v);
                let depth = -w[0].re;
                let len = norm(&w);
                if depth <= 0.0 || (depth / len).acos() > *aperture {
                    return Err(Error::ApproachLeavesCone { index, aperture: *aperture });
                }
                points.push(p.clone());
                depths.push(depth);
            }
        }
    }
    let m = n - 1;
    let mut maps = Vec::with_capacity(deltas.len());
    let mut scaled = Vec::with_capacity(deltas.len());
    let mut transported = Vec::with_capacity(deltas.len());
    for (j, &d) in deltas.iter().enumerate() {
        // block diag(1, T) then dilation
        let mut lin = vec![C64::new(0.0, 0.0); n * n];
        lin[0] = C64::new(1.0, 0.0);
        for i in 0..m {
            for k in 0..m {
                lin[(i + 1) * n + k + 1] = if frame.t.is_empty() {
                    if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                } else {
                    frame.t[i * m + k]
                };
            }
        }
        let dil: Vec<f64> = frame.weights.iter().map(|w| d.powf(-w)).collect();
        for i in 0..n {
            for k in 0..n {
                lin[i * n + k] *= dil[i];
            }
        }
        let linear = AffineMap::new(lin, vec![C64::new(0.0, 0.0); n]).compose(&u);
        let shift: Vec<C64> = linear.apply(p0).into_iter().map(|c| -c).collect();
        let map = AffineMap::new(
            (0..n * n).map(|k| linear.entry(k / n, k % n)).collect(),
            shift,
        );
        let label = format!("{}^[{j}]", domain.label());
        scaled.push(Domain::affine_image(domain.clone(), map.clone(), frame.nu * d).with_label(label));
        transported.push(map.apply(&points[j]));
        maps.push(map);
    }
    Ok(ScalingSequence {
        source: domain.clone(),
        p0: p0.to_vec(),
        approach: approach.clone(),
        class,
        weights: frame.weights,
        deltas: deltas.to_vec(),
        points,
        maps,
        scaled,
        limit: frame.limit,
        transported,
    })
}

/// Largest distance from a grid point lying in exactly one of the two sets
/// to the nearest grid point of the other set, on a `per_axis^{2n}` grid of
/// cell centres in `window` (interleaved real coordinates).
pub fn hausdorff_gap(a: &Domain, b: &Domain, window: &[(f64, f64)], per_axis: usize) -> f64 {
    let dim = window.len();
    assert_eq!(dim, 2 * a.dim());
    let total = per_axis.pow(dim as u32);
    let h: Vec<f64> = window.iter().map(|(l, u)| (u - l) / per_axis as f64).collect();
    let mut in_a = vec![false; total];
    let mut in_b = vec![false; total];
    let mut x = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for k in (0..dim).rev() {
            let i = r % per_axis;
            r /= per_axis;
            x[k] = window[k].0 + (i as f64 + 0.5) * h[k];
        }
        let z = from_real(&x);
        in_a[idx] = a.membership(&z);
        in_b[idx] = b.membership(&z);
    }
    if in_a == in_b {
        return 0.0;
    }
    let diag = h.iter().map(|v| (v * per_axis as f64).powi(2)).sum::<f64>().sqrt();
    let da = squared_edt(&in_a, per_axis, &h);
    let db = squared_edt(&in_b, per_axis, &h);
    let mut worst = 0.0f64;
    for idx in 0..total {
        let d = match (in_a[idx], in_b[idx]) {
            (true, false) => db[idx],
            (false, true) => da[idx],
            _ => continue,
        };
        worst = worst.max(if d.is_finite() { d.sqrt() } else { diag });
    }
    worst
}

/// Squared Euclidean distance to the nearest `true` cell (separable lower
/// envelope of parabolas, one pass per axis).
fn squared_edt(mask: &[bool], per_axis: usize, h: &[f64]) -> Vec<f64> {
    let dim = h.len();
    let big = f64::INFINITY;
    let mut f: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { big }).collect();
    let mut line = vec![0.0; per_axis];
    let mut out = vec![0.0; per_axis];
    for (axis, &hk) in h.iter().enumerate() {
        let stride = per_axis.pow((dim - 1 - axis) as u32);
        let w2 = hk * hk;
        for start in 0..f.len() {
            if (start / stride) % per_axis != 0 {
                continue;
            }
            for i in 0..per_axis {
                line[i] = f[start + i * stride];
            }
            envelope(&line, w2, &mut out);
            for i in 0..per_axis {
                f[start + i * stride] = out[i];
            }
        }
    }
    f
}

fn envelope(f: &[f64], w2: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s = ((f[q] + w2 * (q * q) as f64) - (f[p] + w2 * (p * p) as f64)) / (2.0 * w2 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let d = q as f64 - p as f64;
        *o = w2 * d * d + f[p];
    }
}

/// Default Hausdorff window: `[-4,0]×[-2,2]` for `z_1`, `[-2,2]^2` for the
/// tangential coordinates.
pub fn default_window(n: usize) -> Vec<(f64, f64)> {
    let mut w = vec![(-4.0, 0.0), (-2.0, 2.0)];
    for _ in 1..n {
        w.push((-2.0, 2.0));
        w.push((-2.0, 2.0));
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Kernel,
    Metric,
    Christoffel,
    Distance,
    Ball,
}

impl Quantity {
    pub const ALL: [Quantity; 5] =
        [Quantity::Kernel, Quantity::Metric, Quantity::Christoffel, Quantity::Distance, Quantity::Ball];

    pub fn tag(self) -> &'static str {
        match self {
            Quantity::Kernel => "kernel",
            Quantity::Metric => "metric",
            Quantity::Christoffel => "christoffel",
            Quantity::Distance => "distance",
            Quantity::Ball => "ball",
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown quantity `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOptions {
    pub distance: DistanceOptions,
    pub ball_radius: f64,
    pub epsilon: f64,
    pub ball_directions: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { distance: DistanceOptions::default(), ball_radius: 1.0, epsilon: 0.05, ball_directions: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub j: usize,
    pub delta: f64,
    /// `None` when every test point failed.
    pub gap: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallInclusions {
    /// Limit sphere of radius `R` inside the scaled ball of radius `R + ε`.
    pub outer: bool,
    /// Scaled sphere of radius `R - ε` inside the limit ball of radius `R`.
    pub inner: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub quantity: Quantity,
    pub test_points: Vec<Vec<C64>>,
    pub rows: Vec<GapRow>,
    /// Gaps strictly decreasing down the ladder.
    pub decreasing: bool,
    pub final_gap: Option<f64>,
    /// The reference is the last rung rather than the limit domain.
    pub cauchy: bool,
    /// Ball-quantity inclusions per rung.
    pub inclusions: Vec<BallInclusions>,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(reports: &[ConvergenceReport], w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["quantity", "j", "delta", "gap", "flags"])?;
        for r in reports {
            for row in &r.rows {
                wr.write_record([
                    r.quantity.tag().to_string(),
                    row.j.to_string(),
                    format!("{:e}", row.delta),
                    row.gap.map_or("nan".to_string(), |g| format!("{g:.10e}")),
                    row.flags.join(";"),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

struct Side<'a> {
    model: &'a KernelModel,
    base: Vec<C64>,
}

/// Sup-gaps of the requested quantities between every scaled domain and the
/// limit domain over the test points. When the limit has no kernel the last
/// rung serves as reference (Cauchy check).
pub fn verify_chain(
    seq: &ScalingSequence,
    base_model: &KernelModel,
    test_points: &[Vec<C64>],
    quantities: &[Quantity],
    opts: &ChainOptions,
) -> Result<Vec<ConvergenceReport>> {
    let scaled: Vec<KernelModel> = (0..seq.len()).map(|j| seq.scaled_kernel(j, base_model)).collect();
    let limit_model = build_kernel(&seq.limit, &KernelOptions::closed_form()).ok();
    let cauchy = limit_model.is_none();
    let reference = match &limit_model {
        Some(m) => Side { model: m, base: seq.limit_point().to_vec() },
        None => Side { model: scaled.last().expect("nonempty"), base: seq.limit_point().to_vec() },
    };
    for s in test_points {
        if !reference.model.domain().membership(s) {
            return Err(Error::InvalidArgument(format!("test point {s:?} is outside the reference domain")));
        }
    }
    let reference_ball = if quantities.contains(&Quantity::Ball) {
        Some(sphere_points(reference.model, &reference.base, opts.ball_radius, opts)?)
    } else {
        None
    };
    let mut reports = Vec::new();
    for &q in quantities {
        let per_j: Vec<(GapRow, Option<BallInclusions>)> = (0..seq.len())
            .into_par_iter()
            .map(|j| {
                let side = Side { model: &scaled[j], base: seq.transported[j].clone() };
                rung_gap(q, j, seq.deltas[j], &side, &reference, test_points, reference_ball.as_deref(), opts)
            })
            .collect();
        let rows: Vec<GapRow> = per_j.iter().map(|r| r.0.clone()).collect();
        let inclusions = per_j.iter().filter_map(|r| r.1).collect();
        let considered: Vec<f64> = rows
            .iter()
            .take(if cauchy { rows.len().saturating_sub(1) } else { rows.len() })
            .map(|r| r.gap.unwrap_or(f64::NAN))
            .collect();
        let decreasing = considered.iter().all(|g| g.is_finite()) && considered.windows(2).all(|w| w[1] < w[0]);
        let final_gap = considered.last().copied().filter(|g| g.is_finite());
        reports.push(ConvergenceReport {
            quantity: q,
            test_points: test_points.to_vec(),
            rows,
            decreasing,
            final_gap,
            cauchy,
            inclusions,
        });
    }
    Ok(reports)
}

fn sphere_points(model: &KernelModel, base: &[C64], r: f64, opts: &ChainOptions) -> Result<Vec<Vec<C64>>> {
    let dirs = unit_directions(model, base, opts.ball_directions)?;
    let x0 = to_real(base);
    let g = GeodesicOptions { record: false, ..opts.distance.geodesic.clone() };
    dirs.iter()
        .map(|v| integrate_real(model, &x0, v, r, &g).map(|p| from_real(&p.endpoint)))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn rung_gap(
    q: Quantity,
    j: usize,
    delta: f64,
    side: &Side,
    reference: &Side,
    test_points: &[Vec<C64>],
    reference_ball: Option<&[Vec<C64>]>,
    opts: &ChainOptions,
) -> (GapRow, Option<BallInclusions>) {
    let mut flags = Vec::new();
    let mut gap: Option<f64> = None;
    let mut push = |v: Result<f64>, flags: &mut Vec<String>, label: String| match v {
        Ok(v) => gap = Some(gap.map_or(v, |g: f64| g.max(v))),
        Err(e) => flags.push(format!("{label}:{e}")),
    };
    let mut inclusion = None;
    match q {
        Quantity::Kernel => {
            for (i, s) in test_points.iter().enumerate() {
                let v = (|| {
                    let a = side.model.kernel_eval(s, s)?.value.re;
                    let b = reference.model.kernel_eval(s, s)?.value.re;
                    Ok((a - b).abs() / b.abs())
                })();
                push(v, &mut flags, format!("s{i}"));
            }
        }
        Quantity::Metric => {
            for (i, s) in test_points.iter().enumerate() {
                let v = (|| {
                    let a = metric_tensor(side.model, s)?.g;
                    let b = metric_tensor(reference.model, s)?.g;
                    Ok((a - &b).norm() / b.norm())
                })();
                push(v, &mut flags, format!("s{i}"));
            }
        }
        Quantity::Christoffel => {
            for (i, s) in test_points.iter().enumerate() {
                let v = (|| {
                    let x = to_real(s);
                    let a = christoffel(side.model, &x)?.christoffel.expect("computed");
                    let b = christoffel(reference.model, &x)?.christoffel.expect("computed");
                    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
                })();
                push(v, &mut flags, format!("s{i}"));
            }
        }
        Quantity::Distance => {
            for (i, s) in test_points.iter().enumerate() {
                let v = (|| {
                    let a = point_distance(side.model, &side.base, s, &opts.distance)?;
                    let b = point_distance(reference.model, &reference.base, s, &opts.distance)?;
                    Ok((a - b).abs())
                })();
                push(v, &mut flags, format!("s{i}"));
            }
        }
        Quantity::Ball => {
            let r = opts.ball_radius;
            let eps = opts.epsilon;
            let (mut outer, mut inner) = (true, true);
            for (i, x) in reference_ball.unwrap_or_default().iter().enumerate() {
                let v = point_distance(side.model, &side.base, x, &opts.distance);
                if let Ok(d) = v {
                    outer &= d <= r + eps;
                } else {
                    outer = false;
                }
                push(v.map(|d| (d - r).abs()), &mut flags, format!("lim{i}"));
            }
            match sphere_points(side.model, &side.base, r - eps, opts) {
                Ok(points) => {
                    for (i, y) in points.iter().enumerate() {
                        let v = point_distance(reference.model, &reference.base, y, &opts.distance);
                        if let Ok(d) = v {
                            inner &= d <= r;
                        } else {
                            inner = false;
                        }
                        push(v.map(|d| (d - (r - eps)).abs()), &mut flags, format!("rung{i}"));
                    }
                }
                Err(e) => {
                    inner = false;
                    flags.push(format!("sphere:{e}"));
                }
            }
            inclusion = Some(BallInclusions { outer, inner });
        }
    }
    (GapRow { j, delta, gap, flags }, inclusion)
}

fn point_distance(model: &KernelModel, a: &[C64], b: &[C64], opts: &DistanceOptions) -> Result<f64> {
    if !model.domain().membership(b) {
        return Err(Error::OutsideDomain { domain: model.domain().label().to_string() });
    }
    bergman_distance(model, a, b, opts).map(|r| r.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{c, real_point};

    #[test]
    fn disc_scaling_maps() {
        let seq = build_scaling(&Domain::disc(), &[c(1.0, 0.0)], &Approach::Normal, ScalingClass::StronglyPseudoconvex, &[0.5, 0.1])
            .unwrap();
        for j in 0..2 {
            assert!((seq.transported[j][0] - c(-1.0, 0.0)).norm() < 1e-14);
            let d = seq.deltas[j];
            // D^j = {2 Re w + δ |w|^2 < 0}
            let w = [c(-0.3, 0.7)];
            let rho = seq.scaled[j].defining_values(&w)[0];
            assert!((rho - (2.0 * w[0].re + d * w[0].norm_sqr())).abs() < 1e-13);
        }
        assert_eq!(seq.limit.kind(), &DomainKind::HalfPlane);
    }

    #[test]
    fn ellipsoid_limit_is_siegel() {
        let e = Domain::ellipsoid(vec![1.0, 2.0]);
        let seq = build_scaling(&e, &real_point(&[1.0, 0.0]), &Approach::Normal, ScalingClass::StronglyPseudoconvex, &DEFAULT_DELTAS)
            .unwrap();
        let w = real_point(&[-0.4, 0.3]);
        let j = seq.len() - 1;
        let rho = seq.scaled[j].defining_values(&w)[0];
        let sig = Domain::siegel(2).defining_values(&w)[0];
        assert!((rho - sig).abs() < 1e-2);
        assert!((seq.transported[j][0] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cone_violation() {
        let bad = Approach::Points { aperture: DEFAULT_APERTURE, points: vec![real_point(&[0.9, 0.3])] };
        let r = build_scaling(&Domain::egg(2, 4), &real_point(&[1.0, 0.0]), &bad, ScalingClass::LeviCorankOne, &[0.1]);
        assert!(matches!(r, Err(Error::ApproachLeavesCone { index: 0, .. })));
        let r = build_scaling(&Domain::disc(), &[c(1.0, 0.0)], &Approach::Normal, ScalingClass::BidiscCorner, &[0.1]);
        assert!(matches!(r, Err(Error::UnknownClass(_))));
    }

    #[test]
    fn hausdorff_examples() {
        let w = vec![(-3.0, 0.0), (-2.0, 2.0)];
        let hp = Domain::half_plane();
        assert_eq!(hausdorff_gap(&hp, &hp, &w, 32), 0.0);
        assert_eq!(hausdorff_gap(&Domain::disc(), &Domain::ball(1), &w, 32), 0.0);
        let seq = build_scaling(&Domain::disc(), &[c(1.0, 0.0)], &Approach::Normal, ScalingClass::StronglyPseudoconvex, &[0.1, 0.01])
            .unwrap();
        let g1 = hausdorff_gap(&seq.scaled[0], &hp, &w, 64);
        let g2 = hausdorff_gap(&seq.scaled[1], &hp, &w, 64);
        assert!(g1 > 0.0 && g2 < g1, "{g1} {g2}");
    }

    #[test]
    fn edt_matches_brute_force() {
        let per = 7;
        let h = [0.5, 1.5];
        let mask: Vec<bool> = (0..per * per).map(|i| i % 11 == 3).collect();
        let d = squared_edt(&mask, per, &h);
        for i in 0..per * per {
            let (a, b) = (i / per, i % per);
            let want = (0..per * per)
                .filter(|&k| mask[k])
                .map(|k| {
                    let (p, q) = (k / per, k % per);
                    (h[0] * (a as f64 - p as f64)).powi(2) + (h[1] * (b as f64 - q as f64)).powi(2)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d[i] - want).abs() < 1e-12);
        }
    }
}


