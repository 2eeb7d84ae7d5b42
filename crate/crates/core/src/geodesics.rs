//! Geodesic integration, Bergman distances (shooting with an energy
//! fallback) and Bergman-sphere sampling.

use crate::error::{Error, Result};
use crate::jet::C64;
use crate::kernel::KernelModel;
use crate::metric::{metric_derivatives_unchecked, metric_tensor};
use crate::ode::{dopri5, hermite, OdeOptions, OdeSample, OdeStop};
use crate::points::{from_real, real_dist, real_norm, to_real};
use crate::quadrature::sphere_directions;
use nalgebra::{DMatrix, DVector};
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicOptions {
    pub tol: f64,
    /// Minimum boundary proximity; defaults to the kernel trust margin.
    pub margin: Option<f64>,
    pub record: bool,
    pub max_steps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { tol: 1e-8, margin: None, record: true, max_steps: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: f64,
}

#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicState>,
    pub endpoint: Vec<f64>,
    pub end_velocity: Vec<f64>,
    pub length: f64,
    pub steps: usize,
    pub rejected: usize,
    raw: Vec<OdeSample>,
}

impl GeodesicPath {
    /// Position at arc length `s` by cubic Hermite interpolation of the
    /// recorded samples.
    pub fn position_at(&self, s: f64) -> Option<Vec<f64>> {
        let i = self.raw.partition_point(|p| p.t < s);
        if i == 0 {
            return self.raw.first().map(|p| p.y[..p.y.len() / 2].to_vec());
        }
        let b = self.raw.get(i)?;
        let y = hermite(&self.raw[i - 1], b, s);
        Some(y[..y.len() / 2].to_vec())
    }

    /// One row per sample: `t, x_0.., y_0..`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = self.endpoint.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..d).map(|i| format!("y{i}")));
        wr.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![format!("{:.12e}", s.s)];
            row.extend(s.x.iter().chain(&s.y).map(|v| format!("{v:.12e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `ÿ = -Γ(ẏ, ẏ)` for the realified metric.
fn geodesic_rhs(model: &KernelModel, state: &[f64], out: &mut [f64]) -> Result<()> {
    let d = state.len() / 2;
    let (x, y) = state.split_at(d);
    let z = from_real(x);
    if !model.domain().membership(&z) {
        return Err(Error::OutsideDomain { domain: model.domain().label().to_string() });
    }
    let m = metric_derivatives_unchecked(model, &z)?;
    // r_τ = (∂_μ g̃_{ντ}) y^μ y^ν - ½ (∂_τ g̃_{μν}) y^μ y^ν
    let mut r = DVector::zeros(d);
    let yv = DVector::from_column_slice(y);
    for tau in 0..d {
        let q = (yv.transpose() * &m.dg_real[tau] * &yv)[(0, 0)];
        r[tau] -= 0.5 * q;
    }
    for mu in 0..d {
        let col = &m.dg_real[mu] * &yv;
        r += col * y[mu];
    }
    let chol = m
        .g_real
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric { point: format!("{z:?}"), min_eig: 0.0 })?;
    let a = chol.solve(&r);
    out[..d].copy_from_slice(y);
    for i in 0..d {
        out[d + i] = -a[i];
    }
    Ok(())
}

/// Squared `g̃` norm of a real tangent vector at `x`.
pub fn real_speed_sq(model: &KernelModel, x: &[f64], v: &[f64]) -> Result<f64> {
    let m = metric_derivatives_unchecked(model, &from_real(x))?;
    let vv = DVector::from_column_slice(v);
    Ok((vv.transpose() * &m.g_real * &vv)[(0, 0)])
}

/// Unit-speed geodesic from `x0` in the direction of the complex tangent
/// vector `v`, integrated to metric length `length`.
pub fn integrate_geodesic(
    model: &KernelModel,
    x0: &[C64],
    v: &[C64],
    length: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    integrate_real(model, &to_real(x0), &to_real(v), length, opts)
}

pub(crate) fn integrate_real(
    model: &KernelModel,
    x0: &[f64],
    v: &[f64],
    length: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicPath> {
    match integrate_partial(model, x0, v, length, opts)? {
        (path, None) => Ok(path),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`integrate_real`], but an early stop returns the path up to the last
/// accepted step together with the reason.
pub(crate) fn integrate_partial(
    model: &KernelModel,
    x0: &[f64],
    v: &[f64],
    length: f64,
    opts: &GeodesicOptions,
) -> Result<(GeodesicPath, Option<Error>)> {
    let z0 = from_real(x0);
    metric_tensor(model, &z0)?;
    let speed = real_speed_sq(model, x0, v)?.sqrt();
    if !(speed > 0.0) {
        return Err(Error::InvalidArgument("initial velocity must be nonzero".into()));
    }
    let d = x0.len();
    let mut state = x0.to_vec();
    state.extend(v.iter().map(|c| c / speed));
    let margin = opts.margin.unwrap_or(model.trust_margin());
    if model.domain().proximity(&z0) < margin {
        return Err(Error::LeftDomain { length: 0.0 });
    }
    let ode = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol,
        h0: (0.05f64).min(length.max(1e-12)),
        h_min: 1e-12 * (1.0 + length),
        max_steps: opts.max_steps,
    };
    let mut raw = Vec::new();
    let domain = model.domain();
    let result = dopri5(
        |_t, s: &[f64], out: &mut [f64]| geodesic_rhs(model, s, out),
        |t, s: &[f64]| {
            if domain.proximity(&from_real(&s[..d])) < margin {
                Err(Error::LeftDomain { length: t })
            } else {
                Ok(())
            }
        },
        0.0,
        &state,
        length,
        &ode,
        Some(&mut raw),
    );
    let (end, reached, stats, stop) = match result {
        Ok((y, stats)) => (y, length, stats, None),
        Err((stop, y, t, stats)) => {
            let err = match stop {
                OdeStop::Rhs(e) => e,
                OdeStop::Vetoed(e) => e,
                OdeStop::StepTooSmall { last: Some(Error::DegenerateMetric { point, min_eig }), .. } => {
                    Error::DegenerateMetric { point, min_eig }
                }
                OdeStop::StepTooSmall { .. } => Error::LeftDomain { length: t },
                OdeStop::TooManySteps { t } => Error::NoConvergence(format!("geodesic step budget exhausted at length {t}")),
            };
            (y, t, stats, Some(err))
        }
    };
    let samples = if opts.record {
        raw.iter().map(|p| GeodesicState { x: p.y[..d].to_vec(), y: p.y[d..].to_vec(), s: p.t }).collect()
    } else {
        Vec::new()
    };
    if !opts.record {
        raw.clear();
    }
    let path = GeodesicPath {
        samples,
        endpoint: end[..d].to_vec(),
        end_velocity: end[d..].to_vec(),
        length: reached,
        steps: stats.steps,
        rejected: stats.rejected,
        raw,
    };
    Ok((path, stop))
}

/// Endpoint of the geodesic with initial (non-unit) real velocity `v`, i.e. the
/// exponential map.
fn exp_map(model: &KernelModel, x0: &[f64], v: &[f64], opts: &GeodesicOptions) -> Result<(Vec<f64>, f64)> {
    let len = real_speed_sq(model, x0, v)?.sqrt();
    if len == 0.0 {
        return Ok((x0.to_vec(), 0.0));
    }
    let o = GeodesicOptions { record: false, ..opts.clone() };
    let p = integrate_real(model, x0, v, len, &o)?;
    Ok((p.endpoint, len))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DistanceStrategy {
    /// Shooting, with the energy method only when shooting fails.
    Auto,
    Shooting,
    Energy,
    /// Both methods; the smaller value is reported.
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceOptions {
    pub geodesic: GeodesicOptions,
    pub strategy: DistanceStrategy,
    pub miss_tol: f64,
    pub newton_iters: usize,
    pub energy_segments: usize,
    pub energy_max_segments: usize,
    pub energy_tol: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            geodesic: GeodesicOptions { tol: 1e-10, ..GeodesicOptions::default() },
            strategy: DistanceStrategy::Auto,
            miss_tol: 1e-6,
            newton_iters: 40,
            energy_segments: 64,
            energy_max_segments: 512,
            energy_tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DistanceMethod {
    Coincident,
    Shooting,
    Energy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceResult {
    pub distance: f64,
    pub method: DistanceMethod,
    pub shooting: Option<f64>,
    pub energy: Option<f64>,
    /// Euclidean endpoint miss of the shooting solution.
    pub miss: Option<f64>,
    /// Initial velocity of the shooting solution (real coordinates).
    pub initial_velocity: Option<Vec<f64>>,
}

/// Bergman distance between interior points.
pub fn bergman_distance(model: &KernelModel, z: &[C64], w: &[C64], opts: &DistanceOptions) -> Result<DistanceResult> {
    for p in [z, w] {
        if !model.domain().membership(p) {
            return Err(Error::OutsideDomain { domain: model.domain().label().to_string() });
        }
    }
    let (x, y) = (to_real(z), to_real(w));
    if real_dist(&x, &y) == 0.0 {
        return Ok(DistanceResult {
            distance: 0.0,
            method: DistanceMethod::Coincident,
            shooting: Some(0.0),
            energy: Some(0.0),
            miss: Some(0.0),
            initial_velocity: None,
        });
    }
    let run_shoot = opts.strategy != DistanceStrategy::Energy;
    let shot = if run_shoot { shoot(model, &x, &y, opts).ok() } else { None };
    if run_shoot && shot.is_none() {
        log::debug!("shooting failed between {z:?} and {w:?}");
    }
    let run_energy = match opts.strategy {
        DistanceStrategy::Auto => shot.is_none(),
        DistanceStrategy::Shooting => false,
        DistanceStrategy::Energy | DistanceStrategy::Both => true,
    };
    let energy = if run_energy { energy_distance(model, &x, &y, opts).ok() } else { None };
    let (distance, method) = match (&shot, energy) {
        (Some(s), Some(e)) if e < s.1 => (e, DistanceMethod::Energy),
        (Some(s), _) => (s.1, DistanceMethod::Shooting),
        (None, Some(e)) => (e, DistanceMethod::Energy),
        (None, None) => {
            return Err(Error::NoConvergence(format!(
                "neither shooting nor energy minimization converged between {z:?} and {w:?}"
            )))
        }
    };
    Ok(DistanceResult {
        distance,
        method,
        shooting: shot.as_ref().map(|s| s.1),
        energy,
        miss: shot.as_ref().map(|s| s.2),
        initial_velocity: shot.map(|s| s.0),
    })
}

/// Newton shooting from the straight-segment guess, with multi-start on
/// failure. Returns `(velocity, length, miss)`.
fn shoot(model: &KernelModel, x: &[f64], y: &[f64], opts: &DistanceOptions) -> Result<(Vec<f64>, f64, f64)> {
    let d = x.len();
    let v0: Vec<f64> = (0..d).map(|i| y[i] - x[i]).collect();
    if let Ok(sol) = newton_shoot(model, x, y, v0.clone(), opts) {
        return Ok(sol);
    }
    let scale = real_norm(&v0);
    let mut starts = Vec::new();
    for k in 0..d.min(4) {
        for sign in [1.0, -1.0] {
            let mut v = v0.clone();
            v[k] += sign * 0.25 * scale;
            starts.push(v);
        }
    }
    starts.truncate(8);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for v in starts {
        if let Ok(sol) = newton_shoot(model, x, y, v, opts) {
            best = match best {
                None => Some(sol),
                Some(b) => {
                    if sol.1 < b.1 - 1e-9 || ((sol.1 - b.1).abs() <= 1e-9 && lex_less(&sol.0, &b.0)) {
                        Some(sol)
                    } else {
                        Some(b)
                    }
                }
            };
        }
    }
    best.ok_or_else(|| Error::NoConvergence("shooting failed from all starts".into()))
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

fn newton_shoot(
    model: &KernelModel,
    x: &[f64],
    y: &[f64],
    mut v: Vec<f64>,
    opts: &DistanceOptions,
) -> Result<(Vec<f64>, f64, f64)> {
    let d = x.len();
    let target = DVector::from_column_slice(y);
    let residual = |v: &[f64]| -> Result<(DVector<f64>, f64)> {
        let (e, len) = exp_map(model, x, v, &opts.geodesic)?;
        Ok((DVector::from_vec(e) - &target, len))
    };
    let (mut r, mut len) = residual(&v)?;
    for _ in 0..opts.newton_iters {
        let miss = r.norm();
        if miss < opts.miss_tol * 1e-3 {
            break;
        }
        let h = 1e-6 * (1.0 + real_norm(&v));
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut vp = v.clone();
            vp[j] += h;
            let mut vm = v.clone();
            vm[j] -= h;
            let (rp, _) = residual(&vp)?;
            let (rm, _) = residual(&vm)?;
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let step = jac.lu().solve(&(-&r)).ok_or_else(|| Error::NoConvergence("singular shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let cand: Vec<f64> = (0..d).map(|i| v[i] + lambda * step[i]).collect();
            if let Ok((rc, lc)) = residual(&cand) {
                if rc.norm() < miss {
                    v = cand;
                    r = rc;
                    len = lc;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let miss = r.norm();
    if miss < opts.miss_tol {
        Ok((v, len, miss))
    } else {
        Err(Error::NoConvergence(format!("shooting miss {miss:e}")))
    }
}

/// Discrete path-energy minimization over piecewise-linear paths with the
/// metric frozen at segment midpoints; the segment count doubles until the
/// length settles.
fn energy_distance(model: &KernelModel, x: &[f64], y: &[f64], opts: &DistanceOptions) -> Result<f64> {
    let d = x.len();
    let mut k = opts.energy_segments.max(2);
    let mut interior: Vec<f64> = (1..k)
        .flat_map(|i| {
            let t = i as f64 / k as f64;
            (0..d).map(move |j| x[j] + t * (y[j] - x[j]))
        })
        .collect();
    let mut prev: Option<f64> = None;
    loop {
        interior = minimize_energy(model, x, y, interior, k)?;
        let len = path_length(model, x, y, &interior, k)?;
        if let Some(p) = prev {
            if (p - len).abs() < opts.energy_tol || 2 * k > opts.energy_max_segments {
                return Ok(len);
            }
        } else if 2 * k > opts.energy_max_segments {
            return Ok(len);
        }
        prev = Some(len);
        // refine by inserting midpoints
        let pts = full_path(x, y, &interior, k);
        let mut refined = Vec::with_capacity((2 * k - 1) * d);
        for i in 0..k {
            if i > 0 {
                refined.extend_from_slice(&pts[i * d..(i + 1) * d]);
            }
            refined.extend((0..d).map(|j| 0.5 * (pts[i * d + j] + pts[(i + 1) * d + j])));
        }
        interior = refined;
        k *= 2;
    }
}

fn full_path(x: &[f64], y: &[f64], interior: &[f64], k: usize) -> Vec<f64> {
    let d = x.len();
    let mut pts = Vec::with_capacity((k + 1) * d);
    pts.extend_from_slice(x);
    pts.extend_from_slice(interior);
    pts.extend_from_slice(y);
    pts
}

fn path_length(model: &KernelModel, x: &[f64], y: &[f64], interior: &[f64], k: usize) -> Result<f64> {
    let d = x.len();
    let pts = full_path(x, y, interior, k);
    let mut len = 0.0;
    for i in 0..k {
        let a = &pts[i * d..(i + 1) * d];
        let b = &pts[(i + 1) * d..(i + 2) * d];
        let mid: Vec<f64> = (0..d).map(|j| 0.5 * (a[j] + b[j])).collect();
        let delta: Vec<f64> = (0..d).map(|j| b[j] - a[j]).collect();
        len += real_speed_sq(model, &mid, &delta)?.max(0.0).sqrt();
    }
    Ok(len)
}

/// Energy `Σ Δᵀ g̃(m) Δ` and its gradient in the interior points; `None` if
/// a midpoint leaves the domain.
fn energy_and_grad(model: &KernelModel, x: &[f64], y: &[f64], interior: &[f64], k: usize) -> Option<(f64, Vec<f64>)> {
    let d = x.len();
    let pts = full_path(x, y, interior, k);
    let mut e = 0.0;
    let mut grad = vec![0.0; interior.len()];
    for i in 0..k {
        let a = &pts[i * d..(i + 1) * d];
        let b = &pts[(i + 1) * d..(i + 2) * d];
        let mid: Vec<f64> = (0..d).map(|j| 0.5 * (a[j] + b[j])).collect();
        let z = from_real(&mid);
        if !model.domain().membership(&z) {
            return None;
        }
        let m = metric_derivatives_unchecked(model, &z).ok()?;
        let delta = DVector::from_iterator(d, (0..d).map(|j| b[j] - a[j]));
        let gd = &m.g_real * &delta;
        e += delta.dot(&gd);
        let half_dm: Vec<f64> = (0..d).map(|t| 0.5 * (delta.transpose() * &m.dg_real[t] * &delta)[(0, 0)]).collect();
        if i >= 1 {
            let off = (i - 1) * d;
            for j in 0..d {
                grad[off + j] += -2.0 * gd[j] + half_dm[j];
            }
        }
        if i + 1 < k {
            let off = i * d;
            for j in 0..d {
                grad[off + j] += 2.0 * gd[j] + half_dm[j];
            }
        }
    }
    if !e.is_finite() {
        return None;
    }
    Some((e, grad))
}

/// L-BFGS with Armijo backtracking.
fn minimize_energy(model: &KernelModel, x: &[f64], y: &[f64], start: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    let fail = || Error::NoConvergence("energy path left the domain".into());
    let mut p = start;
    let (mut f, mut g) = energy_and_grad(model, x, y, &p, k).ok_or_else(fail)?;
    let mem = 12;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let g0 = dot(&g, &g).sqrt();
    for _ in 0..5000 {
        let gn = dot(&g, &g).sqrt();
        if gn <= 1e-10 * g0.max(1e-300) || gn < 1e-14 {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, yv) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(yv, s);
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push((a, rho));
        }
        if let (Some(s), Some(yv)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, yv) / dot(yv, yv);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1e-2 / gn;
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, yv), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        let dir = if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            let scale = 1e-2 / gn;
            let d: Vec<f64> = g.iter().map(|v| -v * scale).collect();
            slope = dot(&d, &g);
            d
        } else {
            dir
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            if let Some((fc, gc)) = energy_and_grad(model, x, y, &cand, k) {
                if fc <= f + 1e-4 * t * slope {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((np, nf, ng)) = accepted else { break };
        let s: Vec<f64> = np.iter().zip(&p).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = ng.iter().zip(&g).map(|(a, b)| a - b).collect();
        let rel = (f - nf).abs() / f.abs().max(1e-300);
        if dot(&s, &yv) > 1e-300 {
            s_hist.push(s);
            y_hist.push(yv);
            if s_hist.len() > mem {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        p = np;
        f = nf;
        g = ng;
        if rel < 1e-15 {
            break;
        }
    }
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct BergmanBallSample {
    pub center: Vec<C64>,
    pub radius: f64,
    /// Unit `g̃` directions in real coordinates.
    pub directions: Vec<Vec<f64>>,
    /// Geodesic-sphere points; `None` where integration aborted.
    pub endpoints: Vec<Option<Vec<C64>>>,
}

impl BergmanBallSample {
    pub fn flagged(&self) -> usize {
        self.endpoints.iter().filter(|e| e.is_none()).count()
    }

    /// One row per direction: `index, ok, x_0.., u_0..`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = 2 * self.center.len();
        let mut header = vec!["index".to_string(), "ok".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..d).map(|i| format!("u{i}")));
        wr.write_record(&header)?;
        for (i, (dir, end)) in self.directions.iter().zip(&self.endpoints).enumerate() {
            let mut row = vec![i.to_string(), (end.is_some() as u8).to_string()];
            match end {
                Some(p) => row.extend(to_real(p).iter().map(|v| format!("{v:.12e}"))),
                None => row.extend((0..d).map(|_| "nan".to_string())),
            }
            row.extend(dir.iter().map(|v| format!("{v:.12e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Quasi-uniform unit vectors on the `g̃`-sphere at `z`.
pub fn unit_directions(model: &KernelModel, z: &[C64], count: usize) -> Result<Vec<Vec<f64>>> {
    let dim = 2 * z.len();
    tangent_directions(model, z, sphere_directions(dim, count))
}

/// Maps Euclidean unit vectors `u` to `g`-unit tangent vectors `L^{-T} u`.
pub fn tangent_directions(model: &KernelModel, z: &[C64], units: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let state = metric_tensor(model, z)?;
    let chol = state
        .g_real
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateMetric { point: format!("{z:?}"), min_eig: 0.0 })?;
    let lt = chol.l().transpose();
    Ok(units
        .into_iter()
        .map(|u| {
            let v = lt.clone().solve_upper_triangular(&DVector::from_vec(u)).expect("nonsingular factor");
            v.iter().copied().collect()
        })
        .collect())
}

/// Samples the Bergman sphere of radius `r` around `p` with `n_dirs`
/// geodesics (default `2^n · 64`).
pub fn bergman_ball(
    model: &KernelModel,
    p: &[C64],
    r: f64,
    n_dirs: Option<usize>,
    opts: &GeodesicOptions,
) -> Result<BergmanBallSample> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if !model.domain().membership(p) {
        return Err(Error::OutsideDomain { domain: model.domain().label().to_string() });
    }
    let count = n_dirs.unwrap_or((1usize << model.dim()) * 64);
    let directions = unit_directions(model, p, count)?;
    let x0 = to_real(p);
    let o = GeodesicOptions { record: false, ..opts.clone() };
    let endpoints = directions
        .iter()
        .map(|v| integrate_real(model, &x0, v, r, &o).ok().map(|path| from_real(&path.endpoint)))
        .collect();
    Ok(BergmanBallSample { center: p.to_vec(), radius: r, directions, endpoints })
}
