//! Strictly parsed experiment configuration.

use crate::error::Error;
use crate::fridman::FridmanOptions;
use crate::geodesics::{DistanceOptions, DistanceStrategy, GeodesicOptions};
use crate::kernel::{KernelMode, KernelOptions, MomentSource};
use crate::scaling::{Approach, ChainOptions, Quantity, ScalingClass, DEFAULT_APERTURE, DEFAULT_DELTAS};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    KernelTable,
    MetricTable,
    DistanceTable,
    ScaleVerify,
    FridmanLimit,
    Localization,
    HahnLu,
}

impl ExperimentKind {
    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::KernelTable => "kernel-table",
            ExperimentKind::MetricTable => "metric-table",
            ExperimentKind::DistanceTable => "distance-table",
            ExperimentKind::ScaleVerify => "scale-verify",
            ExperimentKind::FridmanLimit => "fridman-limit",
            ExperimentKind::Localization => "localization",
            ExperimentKind::HahnLu => "hahn-lu",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Filled in from the subcommand when absent.
    pub kind: Option<ExperimentKind>,
    pub domain: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub points: PointsSection,
    #[serde(default)]
    pub distance: DistanceSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub fridman: FridmanSection,
    #[serde(default)]
    pub localization: LocalizationSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

fn default_output() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// `auto`, `closed-form` or `series`.
    pub mode: String,
    pub degree: usize,
    /// `beta` or `qmc:<nodes>:<seed>`.
    pub moments: String,
    pub trust_margin: Option<f64>,
    pub shell_terms: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        let k = KernelOptions::default();
        Self { mode: "auto".into(), degree: k.degree, moments: k.moment_source.tag(), trust_margin: None, shell_terms: k.shell_terms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointsSection {
    /// Random interior points (tables) or pairs (distances).
    pub count: usize,
    /// Smallest accepted boundary proximity of a random point.
    pub min_proximity: f64,
    /// Half-width of the sampling box for unbounded domains.
    pub window: f64,
    /// Explicit points in real layout `[Re z_1, Im z_1, …]`; replaces
    /// random sampling when nonempty.
    pub explicit: Vec<Vec<f64>>,
}

impl Default for PointsSection {
    fn default() -> Self {
        Self { count: 20, min_proximity: 0.1, window: 3.0, explicit: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceSection {
    /// `auto`, `shooting`, `energy` or `both`.
    pub strategy: String,
    pub tol: f64,
    pub miss_tol: f64,
    pub newton_iters: usize,
    pub energy_segments: usize,
    pub energy_max_segments: usize,
    pub energy_tol: f64,
}

impl Default for DistanceSection {
    fn default() -> Self {
        let d = DistanceOptions::default();
        Self {
            strategy: "auto".into(),
            tol: d.geodesic.tol,
            miss_tol: d.miss_tol,
            newton_iters: d.newton_iters,
            energy_segments: d.energy_segments,
            energy_max_segments: d.energy_max_segments,
            energy_tol: d.energy_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    /// Real layout; defaults to `(1, 0, …)`.
    pub boundary_point: Vec<f64>,
    /// `spc`, `levi` or `corner`.
    pub class: String,
    /// `normal` or `cone`.
    pub approach: String,
    pub aperture: f64,
    /// Defaults to half the aperture.
    pub angle: Option<f64>,
    pub deltas: Vec<f64>,
    /// Real layout, in scaled coordinates.
    pub test_points: Vec<Vec<f64>>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            boundary_point: Vec::new(),
            class: "spc".into(),
            approach: "normal".into(),
            aperture: DEFAULT_APERTURE,
            angle: None,
            deltas: DEFAULT_DELTAS.to_vec(),
            test_points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    /// Quantity tags, or `["all"]`.
    pub quantities: Vec<String>,
    pub ball_radius: f64,
    pub epsilon: f64,
    pub ball_directions: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainOptions::default();
        Self { quantities: vec!["all".into()], ball_radius: c.ball_radius, epsilon: c.epsilon, ball_directions: c.ball_directions }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FridmanSection {
    pub directions: Option<usize>,
    pub radius_base: f64,
    pub radius_ratio: f64,
    pub radius_count: usize,
    pub radius_subdivisions: usize,
    pub positions: usize,
    pub position_start: f64,
    pub position_ratio: f64,
    pub anisotropy: Vec<f64>,
    pub flag_fraction: f64,
    pub containment_samples: usize,
    pub circle_samples: usize,
    pub geodesic_tol: f64,
    pub shoot_eps: f64,
    pub soundness_factor: usize,
}

impl Default for FridmanSection {
    fn default() -> Self {
        let f = FridmanOptions::default();
        Self {
            directions: f.directions,
            radius_base: f.radius_base,
            radius_ratio: f.radius_ratio,
            radius_count: f.radius_count,
            radius_subdivisions: f.radius_subdivisions,
            positions: f.positions,
            position_start: f.position_start,
            position_ratio: f.position_ratio,
            anisotropy: f.anisotropy,
            flag_fraction: f.flag_fraction,
            containment_samples: f.containment_samples,
            circle_samples: f.circle_samples,
            geodesic_tol: f.geodesic.tol,
            shoot_eps: f.shoot_eps,
            soundness_factor: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationSection {
    pub inner_radius: f64,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        Self { inner_radius: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    None,
    Decreasing,
    Stabilizing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub hahn_lu_tolerance: f64,
    /// Upper bound on the final distance gap of a stability chain.
    pub final_distance_gap: Option<f64>,
    pub decreasing_gaps: bool,
    pub inclusions: bool,
    pub u_trend: Trend,
    pub final_u_below: Option<f64>,
    /// Relative change of `u` on the last two rungs.
    pub stabilization: f64,
    pub soundness: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            hahn_lu_tolerance: 1e-4,
            final_distance_gap: None,
            decreasing_gaps: true,
            inclusions: true,
            u_trend: Trend::None,
            final_u_below: None,
            stabilization: 0.05,
            soundness: true,
        }
    }
}

/// A configuration error, with the offending key when known.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), message: message.into() }
    }
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.message)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = message
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string);
            ConfigError { key, message }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { key: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks on every knob the experiment uses.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind.ok_or_else(|| ConfigError::at("kind", "experiment kind missing"))?;
        let domain = crate::domains::Domain::from_id(&self.domain).map_err(|e| ConfigError::at("domain", e.to_string()))?;
        self.kernel_options()?;
        if self.points.count == 0 || self.points.count > 100_000 {
            return Err(ConfigError::at("points.count", "must lie in 1..=100000"));
        }
        positive("points.min_proximity", self.points.min_proximity, true)?;
        positive("points.window", self.points.window, false)?;
        for p in &self.points.explicit {
            if p.len() != 2 * domain.dim() {
                return Err(ConfigError::at("points.explicit", format!("points need {} real coordinates", 2 * domain.dim())));
            }
        }
        self.distance_options()?;
        match kind {
            ExperimentKind::ScaleVerify | ExperimentKind::FridmanLimit | ExperimentKind::Localization => {
                self.scaling_class()?;
                self.approach()?;
                self.boundary_point(domain.dim())?;
                let d = &self.scaling.deltas;
                if d.is_empty() || d.iter().any(|x| !(*x > 0.0 && *x < 1.0)) || d.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(ConfigError::at("scaling.deltas", "need a strictly decreasing ladder in (0, 1)"));
                }
            }
            _ => {}
        }
        if kind == ExperimentKind::ScaleVerify {
            self.quantities()?;
            positive("chain.ball_radius", self.chain.ball_radius, false)?;
            positive("chain.epsilon", self.chain.epsilon, false)?;
            if self.chain.ball_directions == 0 {
                return Err(ConfigError::at("chain.ball_directions", "must be positive"));
            }
            for p in &self.scaling.test_points {
                if p.len() != 2 * domain.dim() {
                    return Err(ConfigError::at("scaling.test_points", format!("points need {} real coordinates", 2 * domain.dim())));
                }
            }
        }
        if matches!(kind, ExperimentKind::FridmanLimit | ExperimentKind::Localization) {
            self.fridman_options()?;
        }
        if kind == ExperimentKind::Localization {
            let r = self.localization.inner_radius;
            if !(r > 0.0 && r < 1.0) {
                return Err(ConfigError::at("localization.inner_radius", "must lie in (0, 1)"));
            }
        }
        positive("checks.hahn_lu_tolerance", self.checks.hahn_lu_tolerance, true)?;
        positive("checks.stabilization", self.checks.stabilization, false)?;
        Ok(())
    }

    pub fn kernel_options(&self) -> Result<KernelOptions, ConfigError> {
        let k = &self.kernel;
        let mode = match k.mode.as_str() {
            "auto" => None,
            "closed-form" => Some(KernelMode::ClosedForm),
            "series" => Some(KernelMode::Series),
            other => return Err(ConfigError::at("kernel.mode", format!("unknown mode `{other}`"))),
        };
        if k.degree == 0 || k.degree > 200 {
            return Err(ConfigError::at("kernel.degree", "must lie in 1..=200"));
        }
        let moment_source = MomentSource::parse_tag(&k.moments)
            .ok_or_else(|| ConfigError::at("kernel.moments", format!("unknown moment source `{}`", k.moments)))?;
        if let Some(m) = k.trust_margin {
            positive("kernel.trust_margin", m, false)?;
        }
        if k.shell_terms == 0 || k.shell_terms > 10_000 {
            return Err(ConfigError::at("kernel.shell_terms", "must lie in 1..=10000"));
        }
        Ok(KernelOptions { mode, degree: k.degree, moment_source, trust_margin: k.trust_margin, shell_terms: k.shell_terms })
    }

    pub fn distance_options(&self) -> Result<DistanceOptions, ConfigError> {
        let d = &self.distance;
        let strategy = match d.strategy.as_str() {
            "auto" => DistanceStrategy::Auto,
            "shooting" => DistanceStrategy::Shooting,
            "energy" => DistanceStrategy::Energy,
            "both" => DistanceStrategy::Both,
            other => return Err(ConfigError::at("distance.strategy", format!("unknown strategy `{other}`"))),
        };
        tolerance("distance.tol", d.tol)?;
        tolerance("distance.miss_tol", d.miss_tol)?;
        tolerance("distance.energy_tol", d.energy_tol)?;
        if d.newton_iters == 0 {
            return Err(ConfigError::at("distance.newton_iters", "must be positive"));
        }
        if d.energy_segments < 2 || d.energy_max_segments < d.energy_segments {
            return Err(ConfigError::at("distance.energy_segments", "need 2 <= energy_segments <= energy_max_segments"));
        }
        Ok(DistanceOptions {
            geodesic: GeodesicOptions { tol: d.tol, ..GeodesicOptions::default() },
            strategy,
            miss_tol: d.miss_tol,
            newton_iters: d.newton_iters,
            energy_segments: d.energy_segments,
            energy_max_segments: d.energy_max_segments,
            energy_tol: d.energy_tol,
        })
    }

    pub fn scaling_class(&self) -> Result<ScalingClass, ConfigError> {
        self.scaling.class.parse().map_err(|e: Error| ConfigError::at("scaling.class", e.to_string()))
    }

    pub fn approach(&self) -> Result<Approach, ConfigError> {
        let s = &self.scaling;
        if !(s.aperture > 0.0 && s.aperture < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::at("scaling.aperture", "must lie in (0, π/2)"));
        }
        match s.approach.as_str() {
            "normal" => Ok(Approach::Normal),
            "cone" => {
                let angle = s.angle.unwrap_or(s.aperture / 2.0);
                if !(angle >= 0.0 && angle < s.aperture) {
                    return Err(ConfigError::at("scaling.angle", "must lie in [0, aperture)"));
                }
                Ok(Approach::Cone { aperture: s.aperture, angle })
            }
            other => Err(ConfigError::at("scaling.approach", format!("unknown approach `{other}`"))),
        }
    }

    pub fn boundary_point(&self, n: usize) -> Result<Vec<crate::jet::C64>, ConfigError> {
        let b = &self.scaling.boundary_point;
        if b.is_empty() {
            let mut x = vec![0.0; 2 * n];
            x[0] = 1.0;
            return Ok(crate::points::from_real(&x));
        }
        if b.len() != 2 * n {
            return Err(ConfigError::at("scaling.boundary_point", format!("needs {} real coordinates", 2 * n)));
        }
        Ok(crate::points::from_real(b))
    }

    pub fn quantities(&self) -> Result<Vec<Quantity>, ConfigError> {
        let q = &self.chain.quantities;
        if q.is_empty() {
            return Err(ConfigError::at("chain.quantities", "must not be empty"));
        }
        if q.iter().any(|s| s == "all") {
            return Ok(Quantity::ALL.to_vec());
        }
        q.iter().map(|s| s.parse::<Quantity>().map_err(|e| ConfigError::at("chain.quantities", e.to_string()))).collect()
    }

    pub fn chain_options(&self) -> Result<ChainOptions, ConfigError> {
        Ok(ChainOptions {
            distance: self.distance_options()?,
            ball_radius: self.chain.ball_radius,
            epsilon: self.chain.epsilon,
            ball_directions: self.chain.ball_directions,
        })
    }

    pub fn fridman_options(&self) -> Result<FridmanOptions, ConfigError> {
        let f = &self.fridman;
        if f.directions == Some(0) {
            return Err(ConfigError::at("fridman.directions", "must be positive"));
        }
        positive("fridman.radius_base", f.radius_base, false)?;
        if !(f.radius_ratio > 1.0) {
            return Err(ConfigError::at("fridman.radius_ratio", "must exceed 1"));
        }
        if f.radius_count == 0 || f.radius_count > 200 {
            return Err(ConfigError::at("fridman.radius_count", "must lie in 1..=200"));
        }
        if f.radius_subdivisions == 0 || f.radius_subdivisions > 64 {
            return Err(ConfigError::at("fridman.radius_subdivisions", "must lie in 1..=64"));
        }
        if f.positions == 0 {
            return Err(ConfigError::at("fridman.positions", "must be positive"));
        }
        positive("fridman.position_start", f.position_start, false)?;
        if !(f.position_ratio > 1.0) {
            return Err(ConfigError::at("fridman.position_ratio", "must exceed 1"));
        }
        if f.anisotropy.is_empty() || f.anisotropy.iter().any(|k| !(*k >= 1.0)) {
            return Err(ConfigError::at("fridman.anisotropy", "levels must be at least 1"));
        }
        if !(f.flag_fraction >= 0.0 && f.flag_fraction < 1.0) {
            return Err(ConfigError::at("fridman.flag_fraction", "must lie in [0, 1)"));
        }
        if f.containment_samples == 0 {
            return Err(ConfigError::at("fridman.containment_samples", "must be positive"));
        }
        tolerance("fridman.geodesic_tol", f.geodesic_tol)?;
        positive("fridman.shoot_eps", f.shoot_eps, true)?;
        if f.soundness_factor == 0 {
            return Err(ConfigError::at("fridman.soundness_factor", "must be positive"));
        }
        Ok(FridmanOptions {
            directions: f.directions,
            radius_base: f.radius_base,
            radius_ratio: f.radius_ratio,
            radius_count: f.radius_count,
            radius_subdivisions: f.radius_subdivisions,
            positions: f.positions,
            position_start: f.position_start,
            position_ratio: f.position_ratio,
            anisotropy: f.anisotropy.clone(),
            flag_fraction: f.flag_fraction,
            containment_samples: f.containment_samples,
            circle_samples: f.circle_samples,
            geodesic: GeodesicOptions { tol: f.geodesic_tol, ..GeodesicOptions::default() },
            shoot_eps: f.shoot_eps,
        })
    }
}

fn positive(key: &str, v: f64, allow_zero: bool) -> Result<(), ConfigError> {
    let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(ConfigError::at(key, format!("must be {}, got {v}", if allow_zero { "nonnegative" } else { "positive" })))
    }
}

fn tolerance(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::at(key, format!("must lie in (0, 1), got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::from_toml("kind = \"hahn-lu\"\ndomain = \"disc\"\nbogus = 1\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("bogus"));
        let e = ExperimentConfig::from_toml("domain = \"disc\"\n[kernel]\ndegre = 3\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("degre"));
    }

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::from_toml("kind = \"scale-verify\"\ndomain = \"disc\"\n").unwrap();
        c.validate().unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn range_errors_name_the_key() {
        let c = ExperimentConfig::from_toml("kind = \"fridman-limit\"\ndomain = \"disc\"\n[scaling]\ndeltas = [0.1, 0.2]\n").unwrap();
        assert_eq!(c.validate().unwrap_err().key.as_deref(), Some("scaling.deltas"));
    }
}
