use bergman_core::cli::manifest::cited_hash;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bergman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bergman")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run_config(sub: &str, body: &str) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.toml", body);
    let out = dir.path().join("out");
    let o = bergman(&[sub, "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    (o, dir)
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().skip(1).collect::<Vec<_>>().join("\n");
    csv::Reader::from_reader(body.as_bytes()).records().map(|r| r.unwrap()).collect()
}

fn manifest_hash(path: &Path) -> String {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let recomputed = hex::encode(Sha256::digest(serde_json::to_vec(&v["content"]).unwrap()));
    assert_eq!(v["content_sha256"].as_str().unwrap(), recomputed);
    recomputed
}

#[test]
fn hahn_lu_disc_hundred_pairs() {
    let (o, dir) = run_config("hahnlu", "domain = \"disc\"\nseed = 4\n[points]\ncount = 100\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let rows = csv_rows(&out.join("hahn-lu.csv"));
    assert_eq!(rows.len(), 100);
    for r in &rows {
        let margin: f64 = r[r.len() - 1].parse().unwrap();
        assert!(margin >= -1e-4);
    }
    let hash = manifest_hash(&out.join("hahn-lu.manifest.json"));
    let csv = std::fs::read_to_string(out.join("hahn-lu.csv")).unwrap();
    assert_eq!(cited_hash(&csv), Some(hash.as_str()));
    assert!(std::fs::read_to_string(out.join("hahn-lu.summary.txt")).unwrap().contains("PASS margins"));
}

#[test]
fn scale_verify_disc_reports_five_quantities() {
    let body = "domain = \"disc\"\n[scaling]\nboundary_point = [1.0, 0.0]\n[checks]\ndecreasing_gaps = true\n";
    let (o, dir) = run_config("scale", body);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("out/scale-verify.csv"));
    let mut quantities: Vec<String> = rows.iter().map(|r| r[0].to_string()).collect();
    quantities.dedup();
    assert_eq!(quantities, ["kernel", "metric", "christoffel", "distance", "ball"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.matches("PASS decreasing-").count(), 5, "{stdout}");
}

#[test]
fn malformed_key_is_a_config_error_naming_the_key() {
    let (o, dir) = run_config("hahnlu", "domain = \"disc\"\n[points]\ncont = 5\n");
    assert_eq!(o.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("cont"), "{stderr}");
    let line = stderr.lines().find(|l| l.starts_with('{')).expect("json error record");
    let rec: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(rec["key"].as_str().unwrap().contains("cont"));
    let file = std::fs::read_to_string(dir.path().join("out/error.json")).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&file).unwrap(), rec);
}

#[test]
fn out_of_range_knob_and_kind_mismatch_are_config_errors() {
    let (o, _d) = run_config("hahnlu", "domain = \"disc\"\n[points]\nmin_proximity = -1.0\n");
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("points.min_proximity"));
    let (o, _d) = run_config("hahnlu", "kind = \"kernel-table\"\ndomain = \"disc\"\n");
    assert_eq!(o.status.code(), Some(4));
    let (o, _d) = run_config("kernel", "domain = \"nonsense:3\"\n");
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(bergman(&["frobnicate"]).status.code(), Some(4));
}

#[test]
fn failing_check_exits_two() {
    let body = "domain = \"disc\"\n[scaling]\ndeltas = [0.1, 0.01]\n[chain]\nquantities = [\"distance\"]\n[checks]\nfinal_distance_gap = 1e-12\n";
    let (o, _d) = run_config("scale", body);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL final-distance-gap"));
}

#[test]
fn io_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", "domain = \"disc\"\n[points]\ncount = 3\n");
    let blocker = write_config(dir.path(), "blocker", "");
    let out = blocker.join("out");
    let o = bergman(&["kernel", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"code\":3"));
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "domain = \"egg:2:4\"\nseed = 9\n[points]\ncount = 6\n");
    let mut outputs = Vec::new();
    for (k, workers) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(k);
        let o = bergman(&["distance", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read_to_string(out.join("distance-table.csv")).unwrap());
    }
    assert!(outputs[0] == outputs[1], "outputs differ");
}
