use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fshadow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fshadow"))
        .args(args)
        .env_remove("FSHADOW_CACHE")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let args = ["simulate", "--input", "1,1,0", "--prep-seed", "3", "--unitaries", "20", "--shots", "5", "--seed", "9"];
    for out in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", path(out)]);
        let res = fshadow(&full);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(dir.path().join("a.jsonl.timing.log").exists());
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    let res = fshadow(&["simulate", "--input", "1,1", "--modes", "3", "--unitaries", "2", "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let res = fshadow(&["simulate", "--input", "1,1", "--detector", "{\"p\": 0}", "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn oversized_sector_exits_with_3() {
    let res = fshadow(&["channel", "--modes", "8", "--photons", "6"]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn cache_is_reused_and_corruption_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = path(dir.path());
    let first = fshadow(&["channel", "--modes", "3", "--photons", "2", "--cache-dir", cache]);
    assert!(first.status.success());
    assert!(String::from_utf8_lossy(&first.stdout).to_lowercase().contains("built"));
    let second = fshadow(&["channel", "--modes", "3", "--photons", "2", "--cache-dir", cache]);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stdout).to_lowercase().contains("validated"));

    let blob = dir.path().join("m3-n2").join("proj_1.bin");
    let mut bytes = fs::read(&blob).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&blob, bytes).unwrap();
    let third = fshadow(&["channel", "--modes", "3", "--photons", "2", "--cache-dir", cache]);
    assert_eq!(third.status.code(), Some(4), "{}", String::from_utf8_lossy(&third.stderr));
}

#[test]
fn estimate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let shadow = dir.path().join("s.jsonl");
    let out = dir.path().join("est");
    let res = fshadow(&[
        "simulate", "--input", "1,1,0", "--prep-seed", "4", "--unitaries", "400", "--shots", "3", "--seed", "1",
        "--out", path(&shadow),
    ]);
    assert!(res.status.success());
    let res = fshadow(&[
        "estimate", "--input", path(&shadow), "--true-state", "1,1,0", "--prep-seed", "4", "--out", path(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("correlators.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "i,j,estimate,exact,abs_error");
    assert_eq!(csv.lines().count(), 10);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!((summary["identity_estimate"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    for f in ["invariants.json", "binned.json", "timing.log"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn mitigate_demo_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let res = fshadow(&[
        "mitigate-demo", "--input", "1,1,0", "--prep-seed", "2", "--detector", "{\"p\": 2, \"resolutions\": [1,1,1,1,1,1]}",
        "--shot-counts", "100,1000", "--seed", "5", "--out", path(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "shots,kept,tvd_raw,tvd_mitigated");
    assert_eq!(csv.lines().count(), 3);
}
