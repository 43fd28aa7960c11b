use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excursion-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec(&body).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn bernoulli(out: &Path) -> serde_json::Value {
    serde_json::json!({
        "kind": "bernoulli",
        "scales": [6, 10],
        "mc": {"n": 300, "master_seed": 42},
        "output": out,
    })
}

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", bernoulli(&dir.path().join("o")));
    let out = lab(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

#[test]
fn missing_seed_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = bernoulli(&dir.path().join("o"));
    body["mc"].as_object_mut().unwrap().remove("master_seed");
    let cfg = write_config(dir.path(), "b.json", body);
    for args in [vec!["validate", "--config", &cfg], vec!["run", "--config", &cfg]] {
        let out = lab(&args);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("mc.master_seed required"));
    }
    // A seed on the command line completes the config.
    assert_eq!(lab(&["run", "--config", &cfg, "--seed", "9"]).status.code(), Some(0));
}

#[test]
fn unreadable_config_exits_with_2() {
    let out = lab(&["validate", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_with_3_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("o");
    let body = serde_json::json!({
        "kind": "threshold-stats",
        "kernel": {"kind": "rpw"},
        "grid": {"spacing": 0.5, "nx": 4, "ny": 4},
        "event": {"kind": "rect-cross", "rect": {"x0": 0, "y0": 0, "w": 6, "h": 6},
                  "s0": {"start": 0, "len": 6}, "s2": {"start": 12, "len": 6}},
        "mc": {"n": 100, "master_seed": 1},
        "output": outdir,
    });
    let cfg = write_config(dir.path(), "t.json", body);
    let out = lab(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!outdir.join("threshold-stats.csv").exists());
    assert!(!outdir.join("manifest.json").exists());
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = vec![];
    for w in ["1", "8"] {
        let outdir = dir.path().join(format!("w{w}"));
        let cfg = write_config(dir.path(), &format!("b{w}.json"), bernoulli(&outdir));
        let out = lab(&["run", "--config", &cfg, "--workers", w]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read(outdir.join("bernoulli.csv")).unwrap());
        let manifest: serde_json::Value = serde_json::from_slice(&fs::read(outdir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["workers"], serde_json::json!(w.parse::<u64>().unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn field_dump_subcommand_writes_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("f");
    let body = serde_json::json!({
        "kind": "crossing-curve",
        "kernel": {"kind": "rpw"},
        "grid": {"spacing": 0.25, "nx": 8, "ny": 6},
        "mc": {"n": 1, "master_seed": 3},
        "output": outdir,
    });
    let cfg = write_config(dir.path(), "f.json", body);
    let out = lab(&["field-dump", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = fs::read(outdir.join("field.bin")).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    let header: serde_json::Value = serde_json::from_slice(&bytes[..nl]).unwrap();
    assert_eq!((header["nx"].as_u64(), header["ny"].as_u64()), (Some(8), Some(6)));
    assert_eq!(header["sampler"], "spectral");
    assert_eq!(bytes.len() - nl - 1, 8 * 48);
}

#[test]
fn rsw_fuzz_on_builtin_plans_exits_with_0() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("r");
    let body = serde_json::json!({"kind": "rsw-fuzz", "scales": [8], "mc": {"n": 200, "master_seed": 2}, "output": outdir});
    let cfg = write_config(dir.path(), "r.json", body);
    assert_eq!(lab(&["run", "--config", &cfg]).status.code(), Some(0));
    assert!(!outdir.join("counterexamples.json").exists());
}
