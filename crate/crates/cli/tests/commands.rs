use std::path::Path;
use std::process::{Command, Output};

fn cvmbqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvmbqc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SQUEEZER: &str =
    r#"{"schema_version": 1, "protocol": "squeezer_four_step", "kappa": 0.2, "squeezing_db": 50, "seed": 7}"#;

#[test]
fn run_writes_squeezer_document() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sq.json", SQUEEZER);
    let out_path = dir.path().join("out.json");
    let out = cvmbqc(&["run", &cfg, "--output", out_path.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let s: Vec<f64> = doc["channel"]["S"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in s.iter().zip([0.9616, 0.008, 0.008, 1.04]) {
        assert!((got - want).abs() < 1e-6);
    }
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config"]["protocol"], "squeezer_four_step");
    assert_eq!(doc["channel"]["N"].as_array().unwrap().len(), 3);
    assert_eq!(doc["channel"]["d"].as_array().unwrap().len(), 2);
    assert!(doc["fidelity"].is_number());
    assert_eq!(doc["records"].as_array().unwrap().len(), 4);
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"schema_version": 1, "protocol": "offline_teleport", "squeezing_db": 10, "trials": 3,
            "input": {"kind": "coherent", "re": 0.3, "im": 0.1}}"#,
    );
    let a = cvmbqc(&["run", &cfg, "--seed", "11"]);
    let b = cvmbqc(&["run", &cfg, "--seed", "11"]);
    let c = cvmbqc(&["run", &cfg, "--seed", "12"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout, "records depend on the seed");
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["config"]["seed"], 11);
}

#[test]
fn twenty_trials_share_one_channel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "chain.json",
        r#"{"schema_version": 1, "protocol": "identity_chain", "squeezing_db": 10, "trials": 20}"#,
    );
    let out = cvmbqc(&["run", &cfg, "--quiet"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let trials = doc["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 20);
    assert!(trials.iter().all(|t| t["output"] == trials[0]["output"]));
    assert_eq!(doc["determinism"]["identical"], true);
}

#[test]
fn unknown_protocol_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"schema_version": 1, "protocol": "teleport_everything"}"#);
    let out = cvmbqc(&["run", &cfg]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("protocol") && err.contains("teleport_everything"), "{err}");
}

#[test]
fn missing_file_is_reported() {
    let out = cvmbqc(&["run", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/nonexistent/config.json"));
}

#[test]
fn sweep_fidelity_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sw.json",
        r#"{"schema_version": 1, "protocol": "offline_teleport",
            "sweep": {"param": "squeezing_db", "values": [0, 3, 10]}}"#,
    );
    let out = cvmbqc(&["sweep", &cfg, "--quiet"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("index,param,value,protocol,deviation,noise_trace,fidelity,"));
    let fid: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
    for (got, db) in fid.iter().zip([0.0f64, 3.0, 10.0]) {
        assert!((got - 1.0 / (1.0 + 10f64.powf(-db / 10.0))).abs() < 1e-9);
    }
}

#[test]
fn sweep_noise_is_linear_in_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "len.json",
        r#"{"schema_version": 1, "protocol": "identity_chain", "squeezing_db": 10,
            "sweep": {"param": "n_nodes", "values": [2, 3, 4, 5, 6]}}"#,
    );
    let out = cvmbqc(&["sweep", &cfg, "--quiet"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    for (i, line) in table.lines().skip(1).enumerate() {
        let trace: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!((trace - (i + 1) as f64 * 0.025).abs() < 1e-9, "{line}");
    }
}

#[test]
fn empty_sweep_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "empty.json",
        r#"{"schema_version": 1, "protocol": "offline_teleport", "sweep": {"param": "squeezing_db", "values": []}}"#,
    );
    let out = cvmbqc(&["sweep", &cfg]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("sweep.values"));
    let no_sweep = write(dir.path(), "none.json", r#"{"schema_version": 1, "protocol": "offline_teleport"}"#);
    let out = cvmbqc(&["sweep", &no_sweep]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("sweep"));
}

#[test]
fn verify_passes_on_a_fresh_build() {
    let out = cvmbqc(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("bch_k3_scaling"));
    assert!(!table.contains("FAIL"));
    let quiet = cvmbqc(&["verify", "--quiet"]);
    assert!(quiet.status.success());
    assert!(quiet.stdout.is_empty());
}

#[test]
fn output_path_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config.json");
    let body = format!(
        r#"{{"schema_version": 1, "protocol": "offline_squeezer", "output_path": {:?}}}"#,
        target.to_str().unwrap()
    );
    let cfg = write(dir.path(), "c.json", &body);
    let out = cvmbqc(&["run", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert!(target.exists());

    let sub = dir.path().join("nested");
    std::fs::create_dir(&sub).unwrap();
    let cfg = write(
        &sub,
        "rel.json",
        r#"{"schema_version": 1, "protocol": "offline_teleport", "output_path": "rel.out.json"}"#,
    );
    assert!(cvmbqc(&["run", &cfg, "--quiet"]).status.success());
    assert!(sub.join("rel.out.json").exists());
}
