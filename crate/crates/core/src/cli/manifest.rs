//! Reproducibility manifests. The hashed content holds everything that
//! determines the outputs; run-specific facts sit beside it.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct Manifest {
    content: Value,
    hash: String,
}

impl Manifest {
    /// `config` must already have every default filled in.
    pub fn new(config: Value, resolved: Value, outputs: &[String]) -> Self {
        let content = json!({
            "library": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "resolved": resolved,
            "outputs": outputs,
        });
        let bytes = serde_json::to_vec(&content).expect("manifest serializes");
        let hash = hex::encode(Sha256::digest(&bytes));
        Self { content, hash }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// First line of every CSV written under this manifest.
    pub fn csv_preamble(&self) -> String {
        format!("# manifest-sha256={}\n", self.hash)
    }

    pub fn to_json(&self, wall_time_s: f64, output_dir: &str, checks: &[CheckResult], status: &str) -> String {
        let doc = json!({
            "content_sha256": self.hash,
            "content": self.content,
            "run": {
                "output_dir": output_dir,
                "wall_time_s": wall_time_s,
                "status": status,
                "checks": checks,
            },
        });
        serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n"
    }
}

/// Splits the manifest hash off a CSV written with a preamble.
pub fn cited_hash(csv: &str) -> Option<&str> {
    csv.lines().next()?.strip_prefix("# manifest-sha256=")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_content_only() {
        let a = Manifest::new(json!({"x": 1}), json!({}), &["a.csv".into()]);
        let b = Manifest::new(json!({"x": 1}), json!({}), &["a.csv".into()]);
        let c = Manifest::new(json!({"x": 2}), json!({}), &["a.csv".into()]);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(cited_hash(&a.csv_preamble()), Some(a.hash()));
        let doc: Value = serde_json::from_str(&a.to_json(1.0, "out", &[], "pass")).unwrap();
        assert_eq!(doc["content_sha256"], a.hash());
    }
}
