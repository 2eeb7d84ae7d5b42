//! Experiment dispatch and artifact writing.

use super::config::{ConfigError, ExperimentConfig, ExperimentKind, Trend};
use super::manifest::{CheckResult, Manifest};
use crate::domains::Domain;
use crate::error::Error;
use crate::fridman::{
    boundary_limit_experiment, localization_experiment, resample_soundness, write_limit_csv, write_localization_csv,
};
use crate::geodesics::bergman_distance;
use crate::jet::C64;
use crate::kernel::build_kernel;
use crate::metric::{hahn_lu_check, metric_tensor};
use crate::points::from_real;
use crate::scaling::{build_scaling, verify_chain, ConvergenceReport, Quantity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// A failed run, serialized as the machine-readable error record.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub key: Option<String>,
    pub message: String,
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self { code: EXIT_CONFIG, kind: "config", key: e.key, message: e.message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(message) | Error::UnknownDomainId(message) => {
                Self { code: EXIT_CONFIG, kind: "config", key: None, message }
            }
            Error::Io(message) => Self { code: EXIT_NUMERIC, kind: "io", key: None, message },
            other => Self { code: EXIT_NUMERIC, kind: "numeric", key: None, message: other.to_string() },
        }
    }
}

impl CliError {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub checks: Vec<CheckResult>,
    pub files: Vec<PathBuf>,
    pub manifest_hash: String,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

struct Artifact {
    name: String,
    body: Vec<u8>,
}

struct Outcome {
    artifacts: Vec<Artifact>,
    checks: Vec<CheckResult>,
    resolved: Value,
}

/// Validates, runs and writes `<kind>.csv` (plus companions),
/// `<kind>.manifest.json` and `<kind>.summary.txt` under the output path.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    config.validate()?;
    let kind = config.kind.expect("validated");
    let start = Instant::now();
    log::info!("{} on {} with seed {}", kind.tag(), config.domain, config.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError { code: EXIT_CONFIG, kind: "config", key: Some("workers".into()), message: e.to_string() })?;
    let outcome = pool.install(|| execute(kind, config))?;
    let wall = start.elapsed().as_secs_f64();

    let mut hashed = config.clone();
    hashed.output = PathBuf::new();
    hashed.workers = 0;
    let names: Vec<String> = outcome.artifacts.iter().map(|a| a.name.clone()).collect();
    let manifest = Manifest::new(serde_json::to_value(&hashed).expect("config serializes"), outcome.resolved, &names);

    let dir = &config.output;
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let mut files = Vec::new();
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        let mut bytes = manifest.csv_preamble().into_bytes();
        bytes.extend_from_slice(&a.body);
        std::fs::write(&path, bytes).map_err(Error::from)?;
        log::debug!("wrote {}", path.display());
        files.push(path);
    }
    let status = if outcome.checks.iter().all(|c| c.passed) { "pass" } else { "check-failure" };
    let manifest_path = dir.join(format!("{}.manifest.json", kind.tag()));
    std::fs::write(&manifest_path, manifest.to_json(wall, &dir.display().to_string(), &outcome.checks, status))
        .map_err(Error::from)?;
    files.push(manifest_path);
    let summary_path = dir.join(format!("{}.summary.txt", kind.tag()));
    std::fs::write(&summary_path, summary(kind, config, &outcome.checks, manifest.hash(), wall)).map_err(Error::from)?;
    files.push(summary_path);
    Ok(RunReport { kind, checks: outcome.checks, files, manifest_hash: manifest.hash().to_string() })
}

/// Writes `error.json` next to the would-be outputs; failures to do so are
/// ignored because the record is also printed.
pub fn write_error_record(dir: &Path, err: &CliError) {
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join("error.json"), err.to_json() + "\n");
    }
}

fn summary(kind: ExperimentKind, config: &ExperimentConfig, checks: &[CheckResult], hash: &str, wall: f64) -> String {
    let mut s = format!("experiment {} on {}\nmanifest-sha256 {hash}\nwall time {wall:.2} s\n", kind.tag(), config.domain);
    for c in checks {
        s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    s
}

fn execute(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let domain = Domain::from_id(&cfg.domain)?;
    match kind {
        ExperimentKind::KernelTable => kernel_table(&domain, cfg),
        ExperimentKind::MetricTable => metric_table(&domain, cfg),
        ExperimentKind::DistanceTable => distance_table(&domain, cfg),
        ExperimentKind::HahnLu => hahn_lu(&domain, cfg),
        ExperimentKind::ScaleVerify => scale_verify(&domain, cfg),
        ExperimentKind::FridmanLimit => fridman_limit(&domain, cfg),
        ExperimentKind::Localization => localization(&domain, cfg),
    }
}

/// Seeded rejection sampling in the bounding box, or in a centered window
/// for unbounded domains.
pub fn sample_points(domain: &Domain, count: usize, min_proximity: f64, window: f64, seed: u64) -> crate::Result<Vec<Vec<C64>>> {
    let n = domain.dim();
    let bounds = domain.bounding_box().unwrap_or_else(|| vec![(-window, window); 2 * n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0u64;
    while out.len() < count {
        tries += 1;
        if tries > 10_000_000 {
            return Err(Error::InvalidArgument(format!(
                "found only {} of {count} points at proximity {min_proximity} in `{}`",
                out.len(),
                domain.label()
            )));
        }
        let x: Vec<f64> = bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
        let z = from_real(&x);
        if domain.membership(&z) && domain.proximity(&z) >= min_proximity {
            out.push(z);
        }
    }
    Ok(out)
}

fn points(domain: &Domain, cfg: &ExperimentConfig, count: usize) -> Result<Vec<Vec<C64>>, CliError> {
    if cfg.points.explicit.is_empty() {
        return Ok(sample_points(domain, count, cfg.points.min_proximity, cfg.points.window, cfg.seed)?);
    }
    let pts: Vec<Vec<C64>> = cfg.points.explicit.iter().map(|x| from_real(x)).collect();
    if let Some(i) = pts.iter().position(|z| !domain.membership(z)) {
        return Err(ConfigError { key: Some("points.explicit".into()), message: format!("point {i} lies outside the domain") }.into());
    }
    Ok(pts)
}

fn pairs(domain: &Domain, cfg: &ExperimentConfig) -> Result<Vec<(Vec<C64>, Vec<C64>)>, CliError> {
    let pts = points(domain, cfg, 2 * cfg.points.count)?;
    Ok(pts.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect())
}

fn coord_headers(prefix: &str, n: usize) -> Vec<String> {
    (0..n).flat_map(|k| [format!("{prefix}{}_re", k + 1), format!("{prefix}{}_im", k + 1)]).collect()
}

fn coords(z: &[C64]) -> Vec<String> {
    z.iter().flat_map(|c| [format!("{:.12e}", c.re), format!("{:.12e}", c.im)]).collect()
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(Error::from)?;
    for r in rows {
        w.write_record(&r).map_err(Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::from(Error::Io(e.to_string())))
}

fn kernel_table(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let pts = points(domain, cfg, cfg.points.count)?;
    let values: Vec<(f64, bool)> = pts.par_iter().map(|z| (model.diagonal(z), model.trusted(z))).collect();
    let mut header = vec!["i".to_string()];
    header.extend(coord_headers("z", domain.dim()));
    header.extend(["k_diag".into(), "log_k_diag".into(), "trusted".into()]);
    let rows = pts
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (z, (k, t)))| {
            let mut r = vec![i.to_string()];
            r.extend(coords(z));
            r.extend([num(*k), num(k.ln()), t.to_string()]);
            r
        })
        .collect();
    let positive = values.iter().all(|(k, _)| *k > 0.0 && k.is_finite());
    Ok(Outcome {
        artifacts: vec![Artifact { name: "kernel-table.csv".into(), body: csv_bytes(header, rows)? }],
        checks: vec![CheckResult::new("diagonal-positive", positive, format!("{} points", pts.len()))],
        resolved: json!({ "mode": format!("{:?}", model.mode()), "degree": model.degree(), "trust_margin": model.trust_margin() }),
    })
}

fn metric_table(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let pts = points(domain, cfg, cfg.points.count)?;
    let n = domain.dim();
    let states: Vec<crate::Result<_>> = pts.par_iter().map(|z| metric_tensor(&model, z)).collect();
    let mut header = vec!["i".to_string()];
    header.extend(coord_headers("z", n));
    for a in 0..n {
        for b in a..n {
            header.push(format!("g{}{}_re", a + 1, b + 1));
            header.push(format!("g{}{}_im", a + 1, b + 1));
        }
    }
    header.extend(["min_eig".into(), "max_eig".into(), "error".into()]);
    let width = header.len();
    let mut min_eig = f64::INFINITY;
    let mut failures = 0;
    let mut rows = Vec::new();
    for (i, (z, st)) in pts.iter().zip(&states).enumerate() {
        let mut r = vec![i.to_string()];
        r.extend(coords(z));
        match st {
            Ok(st) => {
                for a in 0..n {
                    for b in a..n {
                        r.push(num(st.g[(a, b)].re));
                        r.push(num(st.g[(a, b)].im));
                    }
                }
                let eig = st.eigenvalues();
                let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
                min_eig = min_eig.min(lo);
                r.extend([num(lo), num(hi), String::new()]);
            }
            Err(e) => {
                failures += 1;
                r.resize(width - 1, String::new());
                r.push(e.to_string());
            }
        }
        rows.push(r);
    }
    Ok(Outcome {
        artifacts: vec![Artifact { name: "metric-table.csv".into(), body: csv_bytes(header, rows)? }],
        checks: vec![
            CheckResult::new("all-evaluated", failures == 0, format!("{failures} failures")),
            CheckResult::new("positive-definite", min_eig > 0.0, format!("smallest eigenvalue {min_eig:e}")),
        ],
        resolved: json!({ "mode": format!("{:?}", model.mode()), "degree": model.degree() }),
    })
}

fn distance_table(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let opts = cfg.distance_options()?;
    let prs = pairs(domain, cfg)?;
    let results: Vec<_> = prs.par_iter().map(|(z, w)| bergman_distance(&model, z, w, &opts)).collect();
    let n = domain.dim();
    let mut header = vec!["i".to_string()];
    header.extend(coord_headers("z", n));
    header.extend(coord_headers("w", n));
    header.extend(["distance", "method", "shooting", "energy", "miss", "error"].map(String::from));
    let mut failures = 0;
    let rows = prs
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, ((z, w), res))| {
            let mut r = vec![i.to_string()];
            r.extend(coords(z));
            r.extend(coords(w));
            match res {
                Ok(d) => r.extend([
                    num(d.distance),
                    format!("{:?}", d.method).to_lowercase(),
                    opt(d.shooting),
                    opt(d.energy),
                    opt(d.miss),
                    String::new(),
                ]),
                Err(e) => {
                    failures += 1;
                    r.extend([String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
                }
            }
            r
        })
        .collect();
    Ok(Outcome {
        artifacts: vec![Artifact { name: "distance-table.csv".into(), body: csv_bytes(header, rows)? }],
        checks: vec![CheckResult::new("all-converged", failures == 0, format!("{failures} of {} pairs failed", prs.len()))],
        resolved: json!({ "pairs": prs.len() }),
    })
}

fn hahn_lu(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let opts = cfg.distance_options()?;
    let prs = pairs(domain, cfg)?;
    let margins: Vec<_> = prs
        .par_iter()
        .map(|p| hahn_lu_check(&model, std::slice::from_ref(p), &opts).map(|mut v| v.remove(0)))
        .collect::<crate::Result<_>>()?;
    let n = domain.dim();
    let mut header = vec!["i".to_string()];
    header.extend(coord_headers("z", n));
    header.extend(coord_headers("w", n));
    header.extend(["caratheodory", "bergman", "margin"].map(String::from));
    let rows = prs
        .iter()
        .zip(&margins)
        .enumerate()
        .map(|(i, ((z, w), m))| {
            let mut r = vec![i.to_string()];
            r.extend(coords(z));
            r.extend(coords(w));
            r.extend([num(m.caratheodory), num(m.bergman), num(m.margin)]);
            r
        })
        .collect();
    let worst = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    let tol = cfg.checks.hahn_lu_tolerance;
    Ok(Outcome {
        artifacts: vec![Artifact { name: "hahn-lu.csv".into(), body: csv_bytes(header, rows)? }],
        checks: vec![CheckResult::new("margins", worst >= -tol, format!("smallest margin {worst:e}, tolerance {tol:e}"))],
        resolved: json!({ "pairs": prs.len() }),
    })
}

fn default_test_points(n: usize) -> Vec<Vec<C64>> {
    [-2.0, -1.0, -0.5]
        .iter()
        .map(|&x| {
            let mut p = vec![C64::new(0.0, 0.0); n];
            p[0] = C64::new(x, 0.0);
            p
        })
        .collect()
}

fn scale_verify(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p0 = cfg.boundary_point(domain.dim())?;
    let seq = build_scaling(domain, &p0, &cfg.approach()?, cfg.scaling_class()?, &cfg.scaling.deltas)?;
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let tests = if cfg.scaling.test_points.is_empty() {
        default_test_points(domain.dim())
    } else {
        cfg.scaling.test_points.iter().map(|x| from_real(x)).collect()
    };
    let quantities = cfg.quantities()?;
    let reports = verify_chain(&seq, &model, &tests, &quantities, &cfg.chain_options()?)?;
    let mut gaps = Vec::new();
    ConvergenceReport::write_csv(&reports, &mut gaps)?;
    let mut artifacts = vec![Artifact { name: "scale-verify.csv".into(), body: gaps }];
    let mut checks = Vec::new();
    if cfg.checks.decreasing_gaps {
        for r in &reports {
            checks.push(CheckResult::new(
                format!("decreasing-{}", r.quantity.tag()),
                r.decreasing,
                format!("final gap {}{}", opt(r.final_gap), if r.cauchy { " (Cauchy reference)" } else { "" }),
            ));
        }
    }
    if let Some(bound) = cfg.checks.final_distance_gap {
        if let Some(r) = reports.iter().find(|r| r.quantity == Quantity::Distance) {
            let ok = r.final_gap.is_some_and(|g| g < bound);
            checks.push(CheckResult::new("final-distance-gap", ok, format!("{} < {bound:e}", opt(r.final_gap))));
        }
    }
    if let Some(r) = reports.iter().find(|r| r.quantity == Quantity::Ball) {
        let rows = r
            .rows
            .iter()
            .zip(&r.inclusions)
            .map(|(row, inc)| vec![row.j.to_string(), format!("{:e}", row.delta), inc.outer.to_string(), inc.inner.to_string()])
            .collect();
        artifacts.push(Artifact {
            name: "scale-verify-inclusions.csv".into(),
            body: csv_bytes(["j", "delta", "outer", "inner"].map(String::from).to_vec(), rows)?,
        });
        if cfg.checks.inclusions {
            let last = r.inclusions.last().copied();
            checks.push(CheckResult::new(
                "inclusions-final-rung",
                last.is_some_and(|i| i.outer && i.inner),
                match last {
                    Some(i) => format!("outer {} inner {} at epsilon {}", i.outer, i.inner, cfg.chain.epsilon),
                    None => "no ball report".to_string(),
                },
            ));
        }
    }
    Ok(Outcome {
        artifacts,
        checks,
        resolved: json!({
            "limit": seq.limit.label(),
            "weights": seq.weights,
            "approach_points": seq.points.iter().map(|p| coords(p)).collect::<Vec<_>>(),
            "test_points": tests.iter().map(|p| coords(p)).collect::<Vec<_>>(),
        }),
    })
}

fn fridman_limit(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p0 = cfg.boundary_point(domain.dim())?;
    let seq = build_scaling(domain, &p0, &cfg.approach()?, cfg.scaling_class()?, &cfg.scaling.deltas)?;
    let model = build_kernel(domain, &cfg.kernel_options()?)?;
    let opts = cfg.fridman_options()?;
    let rows = boundary_limit_experiment(&seq, &model, &opts);
    let mut table = Vec::new();
    write_limit_csv(&rows, &mut table)?;
    let mut sound_rows = Vec::new();
    let mut all_sound = true;
    for r in &rows {
        if let Ok(e) = &r.estimate {
            let s = resample_soundness(&seq.scaled_kernel(r.j, &model), e, cfg.fridman.soundness_factor, &opts)?;
            all_sound &= s.passed;
            sound_rows.push(vec![
                r.j.to_string(),
                format!("{:e}", r.delta),
                s.directions.to_string(),
                num(s.worst_margin),
                s.flagged.to_string(),
                s.passed.to_string(),
            ]);
        }
    }
    let us: Vec<Option<f64>> = rows.iter().map(|r| r.u()).collect();
    let mut checks = vec![CheckResult::new(
        "all-rungs-estimated",
        us.iter().all(Option::is_some),
        format!("{} of {} rungs", us.iter().flatten().count(), us.len()),
    )];
    if cfg.checks.soundness {
        checks.push(CheckResult::new(
            "soundness",
            all_sound,
            format!("{}x sphere resampling", cfg.fridman.soundness_factor),
        ));
    }
    let vals: Vec<f64> = us.iter().map(|u| u.unwrap_or(f64::NAN)).collect();
    match cfg.checks.u_trend {
        Trend::None => {}
        Trend::Decreasing => {
            let ok = vals.iter().all(|u| u.is_finite()) && vals.windows(2).all(|w| w[1] < w[0]);
            checks.push(CheckResult::new("u-strictly-decreasing", ok, format!("{vals:?}")));
        }
        Trend::Stabilizing => {
            let ok = vals.len() >= 2 && {
                let (a, b) = (vals[vals.len() - 2], vals[vals.len() - 1]);
                a > 0.0 && b > 0.0 && ((b - a) / a).abs() < cfg.checks.stabilization
            };
            checks.push(CheckResult::new(
                "u-stabilizes",
                ok,
                format!("{vals:?}, tolerance {}", cfg.checks.stabilization),
            ));
        }
    }
    if let Some(bound) = cfg.checks.final_u_below {
        let last = vals.last().copied().unwrap_or(f64::NAN);
        checks.push(CheckResult::new("final-u", last < bound, format!("{last} < {bound}")));
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact { name: "fridman-limit.csv".into(), body: table },
            Artifact {
                name: "fridman-soundness.csv".into(),
                body: csv_bytes(
                    ["j", "delta", "directions", "worst_margin", "flagged", "passed"].map(String::from).to_vec(),
                    sound_rows,
                )?,
            },
        ],
        checks,
        resolved: json!({
            "limit": seq.limit.label(),
            "radius_grid": opts.radius_grid(),
            "approach_points": seq.points.iter().map(|p| coords(p)).collect::<Vec<_>>(),
        }),
    })
}

fn localization(domain: &Domain, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p0 = cfg.boundary_point(domain.dim())?;
    let opts = cfg.fridman_options()?;
    let rows = localization_experiment(
        domain,
        &p0,
        cfg.scaling_class()?,
        &cfg.approach()?,
        cfg.localization.inner_radius,
        &cfg.scaling.deltas,
        &cfg.kernel_options()?,
        &opts,
    )?;
    let mut table = Vec::new();
    write_localization_csv(&rows, &mut table)?;
    let last = rows.last().and_then(|r| r.ratio);
    Ok(Outcome {
        artifacts: vec![Artifact { name: "localization.csv".into(), body: table }],
        checks: vec![CheckResult::new(
            "ratios-available",
            rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite)),
            format!("ratio at the smallest delta {}", opt(last)),
        )],
        resolved: json!({ "radius_grid": opts.radius_grid(), "inner_radius": cfg.localization.inner_radius }),
    })
}
