//! The `verify-all` suite: a fixed list of experiments run under one seed.

use super::config::ExperimentConfig;
use super::manifest::Manifest;
use super::run::{run, CliError, RunReport, EXIT_CHECK_FAILED, EXIT_PASS};
use crate::error::Error;
use serde_json::json;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Small versions of every experiment kind.
    Quick,
    /// Desk-scale versions, including the egg and localization runs.
    Full,
}

const QUICK: &[(&str, &str)] = &[
    ("kernel-disc", "kind = \"kernel-table\"\ndomain = \"disc\"\n[points]\ncount = 20\n"),
    ("metric-egg", "kind = \"metric-table\"\ndomain = \"egg:2:4\"\n[points]\ncount = 10\n"),
    ("distance-disc", "kind = \"distance-table\"\ndomain = \"disc\"\n[points]\ncount = 10\n"),
    ("hahnlu-disc", "kind = \"hahn-lu\"\ndomain = \"disc\"\n[points]\ncount = 20\n"),
    ("hahnlu-bidisc", "kind = \"hahn-lu\"\ndomain = \"bidisc\"\n[points]\ncount = 10\n"),
    (
        "scale-disc",
        "kind = \"scale-verify\"\ndomain = \"disc\"\n[scaling]\ndeltas = [0.1, 0.01, 0.001]\n[checks]\nfinal_distance_gap = 5e-3\n",
    ),
    ("fridman-ball", "kind = \"fridman-limit\"\ndomain = \"ball:2\"\n[scaling]\ndeltas = [0.1, 0.01]\n"),
    (
        "fridman-ellipsoid",
        "kind = \"fridman-limit\"\ndomain = \"ellipsoid:1,2\"\n[scaling]\ndeltas = [0.1, 0.01]\n[checks]\nu_trend = \"decreasing\"\n",
    ),
];

const FULL: &[(&str, &str)] = &[
    ("kernel-disc", "kind = \"kernel-table\"\ndomain = \"disc\"\n[points]\ncount = 200\n"),
    ("kernel-egg", "kind = \"kernel-table\"\ndomain = \"egg:2:4\"\n[points]\ncount = 100\n"),
    ("metric-egg", "kind = \"metric-table\"\ndomain = \"egg:2:4\"\n[points]\ncount = 100\n"),
    ("distance-disc", "kind = \"distance-table\"\ndomain = \"disc\"\n[points]\ncount = 50\n"),
    ("hahnlu-disc", "kind = \"hahn-lu\"\ndomain = \"disc\"\n[points]\ncount = 100\n"),
    ("hahnlu-bidisc", "kind = \"hahn-lu\"\ndomain = \"bidisc\"\n[points]\ncount = 100\n"),
    ("scale-disc", "kind = \"scale-verify\"\ndomain = \"disc\"\n[checks]\nfinal_distance_gap = 5e-3\n"),
    (
        "scale-ellipsoid",
        "kind = \"scale-verify\"\ndomain = \"ellipsoid:1,2\"\n[chain]\nquantities = [\"kernel\", \"metric\", \"christoffel\"]\n",
    ),
    ("fridman-ball", "kind = \"fridman-limit\"\ndomain = \"ball:2\"\n"),
    (
        "fridman-ellipsoid",
        "kind = \"fridman-limit\"\ndomain = \"ellipsoid:1,2\"\n[checks]\nu_trend = \"decreasing\"\nfinal_u_below = 0.2\n",
    ),
    (
        "fridman-egg",
        "kind = \"fridman-limit\"\ndomain = \"egg:2:4\"\n[scaling]\nclass = \"levi\"\napproach = \"cone\"\n[checks]\nu_trend = \"stabilizing\"\n",
    ),
];

impl Profile {
    fn entries(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Profile::Quick => QUICK,
            Profile::Full => FULL,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Profile::Quick => "quick",
            Profile::Full => "full",
        }
    }
}

pub struct SuiteReport {
    pub entries: Vec<(String, Result<RunReport, CliError>)>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        let mut code = EXIT_PASS;
        for (_, r) in &self.entries {
            match r {
                Err(e) => return e.code,
                Ok(r) if !r.passed() => code = EXIT_CHECK_FAILED,
                _ => {}
            }
        }
        code
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (name, r) in &self.entries {
            match r {
                Ok(r) => {
                    for c in &r.checks {
                        s.push_str(&format!("{} {name}/{}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
                    }
                }
                Err(e) => s.push_str(&format!("ERROR {name}: {}\n", e.message)),
            }
        }
        s
    }
}

/// Runs every experiment of the profile into `<out>/<name>/` and writes
/// `verify-all.csv`, its manifest and a summary into `out`.
pub fn verify_all(out: &Path, seed: u64, profile: Profile, workers: usize) -> Result<SuiteReport, CliError> {
    let start = std::time::Instant::now();
    let mut entries = Vec::new();
    for (name, text) in profile.entries() {
        let mut cfg = ExperimentConfig::from_toml(text)?;
        cfg.seed = seed;
        cfg.workers = workers;
        cfg.output = out.join(name);
        entries.push((name.to_string(), run(&cfg)));
    }
    let report = SuiteReport { entries };
    let experiments: Vec<_> = report
        .entries
        .iter()
        .map(|(name, r)| json!({ "name": name, "manifest": r.as_ref().ok().map(|r| r.manifest_hash.clone()) }))
        .collect();
    let manifest = Manifest::new(
        json!({ "profile": profile.tag(), "seed": seed, "workers": workers }),
        json!({ "experiments": experiments }),
        &["verify-all.csv".to_string()],
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "check", "passed", "detail"]).map_err(Error::from)?;
    for (name, r) in &report.entries {
        match r {
            Ok(r) => {
                for c in &r.checks {
                    w.write_record([name.as_str(), c.name.as_str(), &c.passed.to_string(), c.detail.as_str()])
                        .map_err(Error::from)?;
                }
            }
            Err(e) => w.write_record([name.as_str(), "run", "false", e.message.as_str()]).map_err(Error::from)?,
        }
    }
    let body = w.into_inner().map_err(|e| CliError::from(Error::Io(e.to_string())))?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    let mut bytes = manifest.csv_preamble().into_bytes();
    bytes.extend_from_slice(&body);
    std::fs::write(out.join("verify-all.csv"), bytes).map_err(Error::from)?;
    let status = match report.exit_code() {
        EXIT_PASS => "pass",
        EXIT_CHECK_FAILED => "check-failure",
        _ => "error",
    };
    std::fs::write(out.join("verify-all.manifest.json"), manifest.to_json(start.elapsed().as_secs_f64(), &out.display().to_string(), &[], status))
        .map_err(Error::from)?;
    std::fs::write(out.join("verify-all.summary.txt"), report.summary()).map_err(Error::from)?;
    Ok(report)
}
