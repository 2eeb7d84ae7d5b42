//! Upper bounds for the Fridman invariant from affine ball embeddings, and
//! the boundary-limit and localization experiments.

use crate::domains::{AffineMap, Domain, DomainKind};
use nalgebra::DMatrix;
use crate::error::{Error, Result};
use crate::geodesics::{integrate_partial, tangent_directions, GeodesicOptions};
use crate::jet::C64;
use crate::kernel::{build_kernel, KernelModel, KernelOptions};
use crate::metric::metric_tensor;
use crate::points::{from_real, norm, to_real};
use crate::quadrature::sphere_directions;
use crate::scaling::{build_scaling, Approach, ScalingClass, ScalingSequence};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct FridmanOptions {
    /// Bergman-sphere directions; `2^n · 64` when unset.
    pub directions: Option<usize>,
    /// Radius grid `radius_base · radius_ratio^k`, `k < radius_count`.
    pub radius_base: f64,
    pub radius_ratio: f64,
    pub radius_count: usize,
    /// Geometric subdivisions inserted between consecutive grid radii.
    pub radius_subdivisions: usize,
    /// Normal semi-axes `δ · position_start · position_ratio^i`, `i < positions`.
    pub positions: usize,
    pub position_start: f64,
    pub position_ratio: f64,
    pub anisotropy: Vec<f64>,
    /// Largest tolerated fraction of directions leaving the trusted region.
    pub flag_fraction: f64,
    pub containment_samples: usize,
    /// Extra sphere samples per coordinate great circle.
    pub circle_samples: usize,
    pub geodesic: GeodesicOptions,
    pub shoot_eps: f64,
}

impl Default for FridmanOptions {
    fn default() -> Self {
        Self {
            directions: None,
            radius_base: 0.25,
            radius_ratio: 1.3,
            radius_count: 16,
            radius_subdivisions: 8,
            positions: 17,
            position_start: 0.6,
            position_ratio: 2f64.powf(0.75),
            anisotropy: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            flag_fraction: 0.01,
            containment_samples: 2048,
            circle_samples: 64,
            geodesic: GeodesicOptions { tol: 1e-8, ..GeodesicOptions::default() },
            shoot_eps: 1e-4,
        }
    }
}

impl FridmanOptions {
    pub fn radius_grid(&self) -> Vec<f64> {
        let m = self.radius_subdivisions.max(1);
        let steps = (self.radius_count.max(1) - 1) * m + 1;
        (0..steps).map(|k| self.radius_base * self.radius_ratio.powf(k as f64 / m as f64)).collect()
    }
}

/// `c + Σ ζ_k a_k` applied to the unit ball, with `a_k = σ_k e_k` for an
/// orthonormal frame `e` in the coordinates where it was built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipsoidEmbedding {
    pub center: Vec<C64>,
    pub axes: Vec<Vec<C64>>,
    pub semi_axes: Vec<f64>,
    #[serde(skip)]
    inverse: Vec<C64>,
}

impl EllipsoidEmbedding {
    pub fn new(center: Vec<C64>, frame: &[Vec<C64>], semi_axes: Vec<f64>) -> Self {
        let axes = frame.iter().zip(&semi_axes).map(|(e, s)| e.iter().map(|c| c * *s).collect()).collect();
        Self::from_axes(center, axes, semi_axes)
    }

    fn from_axes(center: Vec<C64>, axes: Vec<Vec<C64>>, semi_axes: Vec<f64>) -> Self {
        let n = center.len();
        let m = DMatrix::from_fn(n, n, |i, k| axes[k][i]);
        let inverse = m.try_inverse().map(|inv| inv.transpose().iter().copied().collect()).unwrap_or_default();
        Self { center, axes, semi_axes, inverse }
    }

    /// Image under an affine map.
    pub fn mapped(&self, map: &AffineMap) -> Self {
        let axes = self.axes.iter().map(|a| map.apply_linear(a)).collect();
        Self::from_axes(map.apply(&self.center), axes, self.semi_axes.clone())
    }

    /// `|ζ|^2` for `z = c + Σ ζ_k a_k`; below one inside.
    pub fn quadratic(&self, z: &[C64]) -> f64 {
        let n = self.center.len();
        if self.inverse.len() != n * n {
            return f64::INFINITY;
        }
        let d: Vec<C64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        (0..n).map(|i| (0..n).map(|k| self.inverse[i * n + k] * d[k]).sum::<C64>().norm_sqr()).sum()
    }

    pub fn apply(&self, zeta: &[C64]) -> Vec<C64> {
        let mut z = self.center.clone();
        for (a, w) in self.axes.iter().zip(zeta) {
            for (zk, ak) in z.iter_mut().zip(a) {
                *zk += ak * w;
            }
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Witness {
    /// Registered biholomorphism onto the ball.
    BallChart(String),
    Ellipsoid { candidate: usize, embedding: EllipsoidEmbedding },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FridmanEstimate {
    pub point: Vec<C64>,
    pub u: f64,
    /// `1/u`, infinite for certified zeros.
    pub radius: f64,
    pub witness: Witness,
    pub directions: usize,
    /// Smallest `1 - q` over the sphere samples used for the certificate.
    pub worst_margin: f64,
    /// Directions that left the trusted region before the certified radius.
    pub flagged: usize,
    pub candidates: usize,
}

fn ball_biholomorphic(domain: &Domain) -> Option<String> {
    match domain.kind() {
        DomainKind::Disc => Some("disc is the unit ball of C".into()),
        DomainKind::Ball(_) => Some("identity".into()),
        DomainKind::HalfPlane => Some("Cayley transform onto the disc".into()),
        DomainKind::Siegel(_) => Some("Cayley transform onto the ball".into()),
        DomainKind::ModelPolynomial(p) if p.is_siegel() => Some("Cayley transform onto the ball".into()),
        DomainKind::AffineImage { base, .. } => ball_biholomorphic(base).map(|s| format!("affine map composed with {s}")),
        _ => None,
    }
}

/// Sampled geodesic rays from `p`: positions in arc-length order and the
/// length at which integration stopped.
struct Ray {
    samples: Vec<(f64, Vec<C64>)>,
    reached: f64,
}

/// Quasi-uniform unit vectors, plus `circle` points on the great circle of
/// every coordinate 2-plane when `circle > 0`.
fn sphere_units(dim: usize, count: usize, circle: usize) -> Vec<Vec<f64>> {
    let mut units = sphere_directions(dim, count);
    for a in 0..dim {
        for b in a + 1..dim {
            for k in 0..circle {
                let t = std::f64::consts::TAU * k as f64 / circle as f64;
                let mut u = vec![0.0; dim];
                u[a] = t.cos();
                u[b] = t.sin();
                units.push(u);
            }
        }
    }
    units
}

fn sample_rays(
    model: &KernelModel,
    p: &[C64],
    units: Vec<Vec<f64>>,
    length: f64,
    grid: &[f64],
    opts: &GeodesicOptions,
) -> Result<Vec<Ray>> {
    let dirs = tangent_directions(model, p, units)?;
    let x0 = to_real(p);
    let g = GeodesicOptions { record: true, ..opts.clone() };
    Ok(dirs
        .par_iter()
        .map(|v| {
            let (path, reached) = match integrate_partial(model, &x0, v, length, &g) {
                Ok((p, _)) => {
                    let r = p.length;
                    (Some(p), r)
                }
                Err(_) => (None, 0.0),
            };
            let mut samples = Vec::new();
            if let Some(path) = path {
                for s in &path.samples {
                    samples.push((s.s, from_real(&s.x)));
                }
                for &r in grid.iter().filter(|&&r| r <= reached) {
                    if let Some(x) = path.position_at(r) {
                        samples.push((r, from_real(&x)));
                    }
                }
                samples.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
            Ray { samples, reached }
        })
        .collect())
}

/// Boundary samples of the ellipsoid: quasi-uniform points plus points
/// clustered around the tangency direction `-e_1`.
fn boundary_samples(n: usize, count: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = sphere_directions(2 * n, count).iter().map(|u| from_real(u)).collect();
    for k in 0..16 {
        let theta = 1e-4 * 2f64.powi(k);
        for axis in 1..2 * n {
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; 2 * n];
                u[0] = -1.0;
                u[axis] = sign * theta;
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(from_real(&u.iter().map(|x| x / nu).collect::<Vec<_>>()));
            }
        }
    }
    out
}

fn contained(domain: &Domain, e: &EllipsoidEmbedding, samples: &[Vec<C64>]) -> bool {
    samples.iter().all(|u| {
        let z = e.apply(u);
        domain.defining_values(&z).iter().all(|v| *v <= 1e-13)
    })
}

fn tangential_frame(model: &KernelModel, p: &[C64], normal: &[C64]) -> Result<Vec<Vec<C64>>> {
    let n = p.len();
    let g = metric_tensor(model, p)?.g;
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frame = vec![normal.to_vec()];
    for i in order {
        if frame.len() == n {
            break;
        }
        let mut v: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
        for f in &frame {
            let proj: C64 = f.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for k in 0..n {
                v[k] -= proj * f[k];
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            frame.push(v.iter().map(|c| c / nv).collect());
        }
    }
    for e in 0..n {
        if frame.len() == n {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[e] = C64::new(1.0, 0.0);
        for f in &frame {
            let proj: C64 = f.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for k in 0..n {
                v[k] -= proj * f[k];
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            frame.push(v.iter().map(|c| c / nv).collect());
        }
    }
    Ok(frame)
}

/// Boundary point whose normal line passes through `p`, with the distance
/// and the inward unit normal there.
fn foot_point(domain: &Domain, p: &[C64]) -> Result<(f64, Vec<C64>, Vec<C64>)> {
    let flat = domain.defining(p).iter().any(|d| !(d.grad_norm() > 1e-9));
    let mut pb = if flat { domain.nearest_boundary_point(p)?.1 } else { p.to_vec() };
    let active = |z: &[C64]| {
        domain
            .defining(z)
            .into_iter()
            .max_by(|a, b| (a.value / a.grad_norm()).total_cmp(&(b.value / b.grad_norm())))
            .expect("at least one defining function")
    };
    let mut outward: Vec<C64> = Vec::new();
    for _ in 0..100 {
        let d = active(&pb);
        let g = norm(&d.dz);
        outward = d.dz.iter().map(|c| c.conj() / g).collect();
        let ray = |t: f64| -> Vec<C64> { p.iter().zip(&outward).map(|(a, v)| a + v * t).collect() };
        let h0 = domain.proximity(p);
        let mut hi = if h0.is_finite() { h0.max(1e-300) } else { crate::points::dist(p, &pb).max(1e-300) };
        let mut guard = 0;
        while domain.membership(&ray(hi)) {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::InvalidArgument("no boundary along the normal".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-16 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if domain.membership(&ray(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let next = ray(lo);
        let moved = crate::points::dist(&next, &pb);
        pb = next;
        if moved <= 1e-15 * (1.0 + norm(&pb)) {
            break;
        }
    }
    let delta = crate::points::dist(p, &pb);
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("point lies on the boundary".into()));
    }
    let inward = outward.iter().map(|c| -c).collect();
    Ok((delta, pb, inward))
}

/// Ellipsoids tangent to the boundary at the nearest boundary point with the
/// largest tangential semi-axis keeping them inside the domain.
fn candidate_family(model: &KernelModel, p: &[C64], opts: &FridmanOptions) -> Result<Vec<EllipsoidEmbedding>> {
    let domain = model.domain();
    let n = p.len();
    let (delta, pb, normal) = foot_point(domain, p)?;
    let frame = tangential_frame(model, p, &normal)?;
    let samples = boundary_samples(n, opts.containment_samples);
    let b_hi0 = domain
        .bounding_box()
        .map(|b| b.iter().map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt())
        .unwrap_or(1e3);
    let levels: Vec<f64> = if n <= 2 { vec![1.0] } else { opts.anisotropy.clone() };
    let mut semis: Vec<f64> =
        (0..opts.positions).map(|i| delta * opts.position_start * opts.position_ratio.powi(i as i32)).collect();
    semis.push(delta);
    let mut params = Vec::new();
    for a in semis {
        for &kappa in &levels {
            params.push((a, kappa));
        }
    }
    let family: Vec<Option<EllipsoidEmbedding>> = params
        .par_iter()
        .map(|&(a, kappa)| {
            let center: Vec<C64> = pb.iter().zip(&normal).map(|(b, v)| b + v * a).collect();
            let weights: Vec<f64> =
                (1..n).map(|k| if n > 2 { kappa.powf(-((k - 1) as f64) / ((n - 2) as f64)) } else { 1.0 }).collect();
            let make = |b: f64| {
                let mut semi = vec![a];
                semi.extend(weights.iter().map(|w| b * w));
                EllipsoidEmbedding::new(center.clone(), &frame, semi)
            };
            if n == 1 {
                let e = make(0.0);
                return contained(domain, &e, &samples).then_some(e);
            }
            let mut lo = 1e-9 * a;
            let mut hi = b_hi0;
            if !contained(domain, &make(lo), &samples) {
                return None;
            }
            if contained(domain, &make(hi), &samples) {
                return Some(make(hi));
            }
            while hi / lo > 1.0 + 1e-10 {
                let mid = (lo * hi).sqrt();
                if contained(domain, &make(mid), &samples) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(make(lo))
        })
        .collect();
    Ok(family.into_iter().flatten().collect())
}

/// Upper bound for the Fridman invariant at `p`.
pub fn fridman_upper(model: &KernelModel, p: &[C64], opts: &FridmanOptions) -> Result<FridmanEstimate> {
    fridman_upper_mapped(model, p, model, &AffineMap::identity(p.len()), opts)
}

/// Upper bound at `p` for the domain of `source`, with the witness family
/// built there and the Bergman sphere sampled in `target`, the image of the
/// source domain under `map`.
pub fn fridman_upper_mapped(
    source: &KernelModel,
    p: &[C64],
    target: &KernelModel,
    map: &AffineMap,
    opts: &FridmanOptions,
) -> Result<FridmanEstimate> {
    let domain = source.domain();
    if !domain.membership(p) {
        return Err(Error::OutsideDomain { domain: domain.label().to_string() });
    }
    let count = opts.directions.unwrap_or((1usize << p.len()) * 64);
    let q = map.apply(p);
    if let Some(chart) = ball_biholomorphic(domain) {
        return Ok(FridmanEstimate {
            point: q,
            u: 0.0,
            radius: f64::INFINITY,
            witness: Witness::BallChart(chart),
            directions: 0,
            worst_margin: f64::INFINITY,
            flagged: 0,
            candidates: 0,
        });
    }
    let model = target;
    let grid = opts.radius_grid();
    let r_max = *grid.last().ok_or_else(|| Error::InvalidArgument("empty radius grid".into()))?;
    let rays = sample_rays(model, &q, sphere_units(2 * q.len(), count, opts.circle_samples), r_max, &grid, &opts.geodesic)?;
    let count = rays.len();
    let allowed = (opts.flag_fraction * count as f64).floor() as usize;
    let cap = grid
        .iter()
        .take_while(|&&r| rays.iter().filter(|ray| ray.reached < r).count() <= allowed)
        .count();
    if cap == 0 {
        return Err(Error::NoEmbeddingFound(format!(
            "more than {allowed} of {count} geodesics left the trusted region before radius {}",
            grid[0]
        )));
    }
    let family: Vec<EllipsoidEmbedding> = candidate_family(source, p, opts)?.iter().map(|e| e.mapped(map)).collect();
    let scored: Vec<(usize, usize)> = family
        .par_iter()
        .enumerate()
        .map(|(ci, e)| {
            let exits: Vec<f64> = rays
                .iter()
                .map(|ray| {
                    ray.samples.iter().find(|(_, z)| e.quadratic(z) >= 1.0).map_or(f64::INFINITY, |s| s.0)
                })
                .collect();
            let k = (0..cap)
                .take_while(|&k| rays.iter().zip(&exits).all(|(ray, &t)| t > grid[k].min(ray.reached)))
                .count();
            (ci, k)
        })
        .collect();
    let best = scored.iter().filter(|s| s.1 > 0).max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
    let Some(&(ci, k)) = best else {
        return Err(Error::NoEmbeddingFound(format!(
            "{} candidate ellipsoids, none contains the Bergman ball of radius {}",
            family.len(),
            grid[0]
        )));
    };
    let e = family[ci].clone();
    let dense = sample_rays(
        model,
        &q,
        sphere_units(2 * q.len(), 2 * count, 2 * opts.circle_samples),
        grid[k - 1],
        &grid[..k],
        &opts.geodesic,
    )?;
    let dense_allowed = (opts.flag_fraction * dense.len() as f64).floor() as usize;
    let k = (0..k)
        .take_while(|&k| {
            let r = grid[k];
            dense.iter().filter(|ray| ray.reached < r).count() <= dense_allowed
                && dense.iter().all(|ray| ray.samples.iter().filter(|s| s.0 <= r).all(|(_, z)| e.quadratic(z) < 1.0))
        })
        .count();
    if k == 0 {
        return Err(Error::NoEmbeddingFound(format!(
            "best of {} candidate ellipsoids fails the densified sphere at radius {}",
            family.len(),
            grid[0]
        )));
    }
    let radius = grid[k - 1];
    let mut worst = f64::INFINITY;
    let mut flagged = 0;
    for ray in &rays {
        if ray.reached < radius {
            flagged += 1;
        }
        for (_, z) in ray.samples.iter().filter(|s| s.0 <= radius) {
            worst = worst.min(1.0 - e.quadratic(z));
        }
    }
    Ok(FridmanEstimate {
        point: q,
        u: 1.0 / radius,
        radius,
        witness: Witness::Ellipsoid { candidate: ci, embedding: e },
        directions: count,
        worst_margin: worst,
        flagged,
        candidates: family.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub directions: usize,
    pub worst_margin: f64,
    pub flagged: usize,
    pub passed: bool,
}

/// Re-samples the Bergman sphere of radius `r* - ε` with `factor` times the
/// directions and checks every sample against the witness.
pub fn resample_soundness(model: &KernelModel, est: &FridmanEstimate, factor: usize, opts: &FridmanOptions) -> Result<SoundnessReport> {
    let Witness::Ellipsoid { embedding, .. } = &est.witness else {
        return Ok(SoundnessReport { directions: 0, worst_margin: f64::INFINITY, flagged: 0, passed: true });
    };
    let count = est.directions * factor;
    let r = est.radius - opts.shoot_eps;
    let rays = sample_rays(model, &est.point, sphere_units(2 * est.point.len(), count, 0), r, &[r], &opts.geodesic)?;
    let mut worst = f64::INFINITY;
    let mut flagged = 0;
    for ray in &rays {
        if ray.reached < r {
            flagged += 1;
        }
        for (_, z) in &ray.samples {
            worst = worst.min(1.0 - embedding.quadratic(z));
        }
    }
    let passed = worst >= -1e-6 && flagged as f64 <= opts.flag_fraction * count as f64;
    Ok(SoundnessReport { directions: count, worst_margin: worst, flagged, passed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    pub j: usize,
    pub delta: f64,
    pub estimate: std::result::Result<FridmanEstimate, String>,
}

impl LimitRow {
    pub fn u(&self) -> Option<f64> {
        self.estimate.as_ref().ok().map(|e| e.u)
    }
}

/// `u_j = u(p^j; D) = u(q^j; D^j)`: witnesses are built on `D` at `p^j` and
/// the Bergman spheres are sampled on the scaled domain around `q^j`.
pub fn boundary_limit_experiment(seq: &ScalingSequence, model: &KernelModel, opts: &FridmanOptions) -> Vec<LimitRow> {
    (0..seq.len())
        .map(|j| {
            let scaled = seq.scaled_kernel(j, model);
            LimitRow {
                j,
                delta: seq.deltas[j],
                estimate: fridman_upper_mapped(model, &seq.points[j], &scaled, &seq.maps[j], opts).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

pub fn write_limit_csv<W: Write>(rows: &[LimitRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "delta", "u", "radius", "candidate", "semi_axes", "worst_margin", "flagged", "error"])?;
    for r in rows {
        match &r.estimate {
            Ok(e) => {
                let (cand, axes) = match &e.witness {
                    Witness::Ellipsoid { candidate, embedding } => (
                        candidate.to_string(),
                        embedding.semi_axes.iter().map(|s| format!("{s:.10e}")).collect::<Vec<_>>().join(";"),
                    ),
                    Witness::BallChart(c) => ("chart".to_string(), c.clone()),
                };
                wr.write_record([
                    r.j.to_string(),
                    format!("{:e}", r.delta),
                    format!("{:.10e}", e.u),
                    format!("{:.10e}", e.radius),
                    cand,
                    axes,
                    format!("{:.6e}", e.worst_margin),
                    e.flagged.to_string(),
                    String::new(),
                ])?;
            }
            Err(msg) => wr.write_record([
                r.j.to_string(),
                format!("{:e}", r.delta),
                "nan".into(),
                "nan".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                msg.clone(),
            ])?,
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationRow {
    pub delta: f64,
    pub u_full: Option<f64>,
    pub u_local: Option<f64>,
    pub ratio: Option<f64>,
    pub note: String,
}

/// Estimates on `D` and on `U ∩ D` with `U = {|z_1| > inner_radius}` along an
/// approach to `p0`. A negative radius makes `U` the whole space.
pub fn localization_experiment(
    domain: &Domain,
    p0: &[C64],
    class: ScalingClass,
    approach: &Approach,
    inner_radius: f64,
    deltas: &[f64],
    kernel: &KernelOptions,
    opts: &FridmanOptions,
) -> Result<Vec<LocalizationRow>> {
    let seq = build_scaling(domain, p0, approach, class, deltas)?;
    let full = build_kernel(domain, kernel)?;
    let local = if inner_radius < 0.0 {
        full.clone()
    } else {
        build_kernel(&Domain::intersection(vec![domain.clone(), Domain::coordinate_shell(domain.dim(), 0, inner_radius)]), kernel)?
    };
    Ok(seq
        .points
        .iter()
        .zip(deltas)
        .map(|(p, &delta)| {
            let a = fridman_upper(&full, p, opts);
            let b = fridman_upper(&local, p, opts);
            let mut note = String::new();
            if let Err(e) = &a {
                note.push_str(&format!("full: {e}"));
            }
            if let Err(e) = &b {
                if !note.is_empty() {
                    note.push_str("; ");
                }
                note.push_str(&format!("local: {e}"));
            }
            let (u_full, u_local) = (a.ok().map(|e| e.u), b.ok().map(|e| e.u));
            let ratio = match (u_full, u_local) {
                (Some(f), Some(l)) if f > 0.0 => Some(l / f),
                (Some(f), Some(l)) if f == 0.0 && l == 0.0 => Some(1.0),
                _ => None,
            };
            LocalizationRow { delta, u_full, u_local, ratio, note }
        })
        .collect())
}

pub fn write_localization_csv<W: Write>(rows: &[LocalizationRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["delta", "u_full", "u_local", "ratio", "note"])?;
    let f = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.10e}"));
    for r in rows {
        wr.write_record([format!("{:e}", r.delta), f(r.u_full), f(r.u_local), f(r.ratio), r.note.clone()])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{c, real_point};

    #[test]
    fn certified_zeros() {
        for d in [Domain::disc(), Domain::ball(2), Domain::half_plane(), Domain::siegel(2)] {
            let m = build_kernel(&d, &KernelOptions::default()).unwrap();
            let p = if d.is_bounded() { vec![c(0.1, 0.0); d.dim()] } else {
                let mut p = vec![c(0.0, 0.0); d.dim()];
                p[0] = c(-1.0, 0.0);
                p
            };
            let e = fridman_upper(&m, &p, &FridmanOptions::default()).unwrap();
            assert_eq!(e.u, 0.0);
            assert!(matches!(e.witness, Witness::BallChart(_)));
        }
    }

    #[test]
    fn ellipsoid_embedding_round_trip() {
        let e = EllipsoidEmbedding::new(
            real_point(&[0.1, 0.2]),
            &[vec![c(0.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
            vec![0.5, 0.25],
        );
        let z = e.apply(&[c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((e.quadratic(&z) - 1.0).abs() < 1e-14);
    }
}
