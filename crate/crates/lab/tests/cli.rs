//! End-to-end checks of the `lab` binary: exit codes, outputs and manifests.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    lab_threads("1", args)
}

fn lab_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .env("LAB_THREADS", threads)
        .output()
        .expect("spawn lab")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn tiny_bias(lr: f64) -> Value {
    json!({
        "kind": "spectral-bias",
        "seeds": [0, 1],
        "network": {"hidden": [8, 8]},
        "optimizer": {"lr": lr},
        "steps": 40,
        "eval_every": 10,
        "target": {"frequencies": [1, 2, 3], "samples": 32}
    })
}

#[test]
fn run_writes_manifest_listing_exactly_the_written_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_json(tmp.path(), "c.json", &tiny_bias(1e-3));
    let out = tmp.path().join("run");
    let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["kind"], "spectral-bias");

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect();
    listed.sort();
    let mut on_disk = Vec::new();
    walk(&out, &out, &mut on_disk);
    on_disk.retain(|p| p != "manifest.json");
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            walk(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
        }
    }
}

#[test]
fn reruns_are_byte_identical_and_seed_override_applies() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_json(tmp.path(), "c.json", &tiny_bias(1e-3));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(lab(&["run", &cfg, "--out", a.to_str().unwrap(), "--seeds", "3"]).status.success());
    assert!(lab_threads("2", &["run", &cfg, "--out", b.to_str().unwrap(), "--seeds", "3"]).status.success());
    let mut files = Vec::new();
    walk(&a, &a, &mut files);
    assert!(files.iter().any(|f| f == "seed_3/trace.csv"));
    assert!(!files.iter().any(|f| f.starts_with("seed_0")));
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let mut v = tiny_bias(1e-3);
    v["stpes"] = json!(10);
    let cfg = write_json(tmp.path(), "typo.json", &v);
    let o = lab(&["run", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stpes"));

    let mut v = tiny_bias(1e-3);
    v["kind"] = json!("volume-mc");
    let cfg = write_json(tmp.path(), "kind.json", &v);
    assert_eq!(lab(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(lab(&["run", "/nonexistent/config.json"]).status.code(), Some(1));
}

#[test]
fn divergence_exits_3_naming_the_iteration() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_json(tmp.path(), "c.json", &tiny_bias(1e200));
    let o = lab(&["run", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(3), "{err}");
    assert!(err.contains("iteration") || err.contains("step"), "{err}");
}

#[test]
fn render_and_regions_subcommands() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_json(tmp.path(), "c.json", &tiny_bias(1e-3));
    let run = tmp.path().join("run");
    assert!(lab(&["run", &cfg, "--out", run.to_str().unwrap(), "--seeds", "0"]).status.success());

    let svg = tmp.path().join("t.svg");
    let trace = run.join("trace_mean.csv");
    let o = lab(&["render", trace.to_str().unwrap(), "--clip", "0,1", "-o", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    let bad = lab(&["render", trace.to_str().unwrap(), "--clip", "1,0", "-o", svg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));

    let net = run.join("seed_0/net.json");
    let o = lab(&["regions", net.to_str().unwrap(), "--line", "0,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().count() >= 2);
    let o = lab(&["regions", net.to_str().unwrap(), "--line", "-1,0,1,2"]);
    assert_eq!(o.status.code(), Some(2));
}
