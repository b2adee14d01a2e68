use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn weaknoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaknoise"))
        .args(args)
        .env_remove("WEAKNOISE_WORKERS")
        .output()
        .expect("spawn weaknoise")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const NOISELESS: &str = r#"{
    "ecf": {"q": 2, "a": [0]},
    "channel": {"power": 1, "noise_variance": 1e-12},
    "modulator": {"kind": "quantize_and_code", "levels": [4]},
    "block_lengths": [4, 6],
    "trials_per_probe": 3,
    "master_seed": 5
}"#;

/// Same config with the keys in another order and different whitespace.
const NOISELESS_REORDERED: &str = r#"{"master_seed":5,"trials_per_probe":3,"block_lengths":[4,6],
    "modulator":{"levels":[4],"kind":"quantize_and_code"},
    "channel":{"noise_variance":1e-12,"power":1},"ecf":{"a":[0],"q":2}}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn theory_examples() {
    let out = weaknoise(&["--json", "theory", "--q", "2", "--a", "0", "--gamma", "6.38905609893065"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["capacity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["exponent"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["rates"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = weaknoise(&["--json", "theory", "--q", "1", "--a", "0,0", "--gamma", "0"]);
    assert_eq!(json(&out)["exponent"].as_f64(), Some(0.0));

    let out = weaknoise(&["theory", "--q", "1", "--a", "2,0", "--gamma", "7.389056", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    // without --strict the violation is reported but not fatal
    let out = weaknoise(&["--json", "theory", "--q", "1", "--a", "2,0", "--gamma", "7.389056"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["a1_satisfied"], serde_json::Value::Bool(false));
    assert!(json(&out)["exponent"].is_null());
}

#[test]
fn theory_oracle_and_dimension_flags() {
    let out = weaknoise(&["--json", "theory", "--q", "2", "--a", "0.1", "--d", "2", "--power", "3", "--noise-variance", "1", "--oracle"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["a"].as_array().unwrap().len(), 2);
    let e = v["exponent"].as_f64().unwrap();
    let o = v["oracle"]["value"].as_f64().unwrap();
    assert_eq!(v["oracle"]["grid_steps"].as_u64(), Some(2000));
    assert!(o <= e && e - o <= 2.0 * (2.0f64).ln() / 2.0 * 2.0 / 2000.0 + 1e-9);
}

#[test]
fn invalid_flags_exit_2() {
    for args in [
        &["theory", "--q", "0.5", "--a", "0", "--gamma", "1"][..],
        &["theory", "--q", "1", "--gamma", "1"],
        &["theory", "--q", "1", "--a", "0,0", "--d", "3", "--gamma", "1"],
        &["theory", "--q", "1", "--a", "0"],
        &["scan", "--mu", "0", "--mv", "3"],
        &["scan", "--mu", "x", "--mv", "3"],
        &["simulate", "/nonexistent/config.json", "--out", "/tmp"],
    ] {
        assert_eq!(weaknoise(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn scan_matches_golden_file() {
    let out = weaknoise(&["scan", "--mu", "4", "--mv", "4"]);
    assert!(out.status.success());
    let golden = include_str!("golden/scan_4x4.csv");
    assert_eq!(stdout(&out), golden);
    let rollovers: Vec<usize> = golden
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rollovers, [0, 2, 5, 9, 12, 14]);

    let one = stdout(&weaknoise(&["scan", "--mu", "1", "--mv", "1"]));
    assert_eq!(one.lines().count(), 2);
    assert!(one.lines().nth(1).unwrap().ends_with(",false"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = weaknoise(&["scan", "--mu", "3", "--mv", "2", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 3);

    let v = json(&weaknoise(&["--json", "scan", "--mu", "2", "--mv", "2"]));
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(v[0]["is_rollover"], serde_json::Value::Bool(true));
}

#[test]
fn noiseless_simulation_hits_the_quantization_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", NOISELESS);
    let out_dir = dir.path().join("run");
    let out = weaknoise(&["simulate", &cfg, "--out", out_dir.to_str().unwrap(), "--export-codebooks"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("n,sup_cost,delta_n,exponent_theory,exponent_fit,converse_bound"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1].parse::<f64>().unwrap(), 0.125f64.powi(2), "{line}");
        assert_eq!(cells[2].parse::<f64>().unwrap(), 0.0);
    }
    let first = fs::read_to_string(out_dir.join("trials.ndjson")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    let keys: Vec<&String> = rec.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 7);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["trials.ndjson", "summary.csv", "codebook_n4.wncb", "codebook_n6.wncb"]);
    for name in outputs {
        assert!(out_dir.join(name).exists());
    }
    let wncb = fs::read(out_dir.join("codebook_n4.wncb")).unwrap();
    assert_eq!(&wncb[..4], b"WNCB");
    // header: magic, version u32, M, n, P, seed (40 bytes), then 4 codewords of length 4
    assert_eq!(wncb.len(), 40 + 4 * 4 * 8);
}

#[test]
fn reruns_are_byte_identical_and_digest_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.json", NOISELESS);
    let b = write_config(dir.path(), "b.json", NOISELESS_REORDERED);
    let runs = [("r1", &a, "1"), ("r2", &a, "3"), ("r3", &b, "2")];
    for (name, cfg, workers) in runs {
        let out = weaknoise(&["--workers", workers, "simulate", cfg, "--out", dir.path().join(name).to_str().unwrap()]);
        assert!(out.status.success());
    }
    let read = |run: &str, file: &str| fs::read(dir.path().join(run).join(file)).unwrap();
    let digest = |run: &str| -> String {
        let m: serde_json::Value = serde_json::from_slice(&read(run, "manifest.json")).unwrap();
        m["config_digest"].as_str().unwrap().to_string()
    };
    for run in ["r2", "r3"] {
        assert_eq!(read("r1", "trials.ndjson"), read(run, "trials.ndjson"));
        assert_eq!(read("r1", "summary.csv"), read(run, "summary.csv"));
        assert_eq!(digest("r1"), digest(run));
    }
    assert_eq!(digest("r1").len(), 64);

    // a different seed is a different config
    let out = weaknoise(&["--seed", "6", "simulate", &a, "--out", dir.path().join("r4").to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(digest("r1"), digest("r4"));
}

#[test]
fn workers_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", NOISELESS);
    let out = Command::new(env!("CARGO_BIN_EXE_weaknoise"))
        .args(["simulate", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
        .env("WEAKNOISE_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_weaknoise"))
        .args(["simulate", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
        .env("WEAKNOISE_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "z.json", &NOISELESS.replace("\"trials_per_probe\": 3", "\"trials_per_probe\": 0"));
    let out = weaknoise(&["simulate", &zero, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let unknown = write_config(dir.path(), "u.json", &NOISELESS.replace("\"master_seed\"", "\"seed\""));
    let out = weaknoise(&["simulate", &unknown, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let garbage = write_config(dir.path(), "g.json", "{not json");
    let out = weaknoise(&["sweep", &garbage, "--gammas", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn all_outage_exits_4() {
    // a silent coded transmitter always decodes message 0
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &NOISELESS.replace("\"noise_variance\": 1e-12", "\"noise_variance\": 1"));
    let out = weaknoise(&["sweep", &cfg, "--gammas", "0"]);
    assert_eq!(out.status.code(), Some(4));
    let out = weaknoise(&["sweep", &cfg, "--gammas", "1,8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("gamma,sup_cost,delta_n,exponent_theory,converse_bound"));
    assert_eq!(text.lines().count(), 3);
}

const CONSTANT_2D: &str = r#"{
    "ecf": {"q": 1, "a": [0, 0]},
    "channel": {"power": 1, "noise_variance": 1},
    "modulator": {"kind": "quantize_and_code", "levels": [1, 1]},
    "block_lengths": [4],
    "trials_per_probe": 4,
    "converse_grid": [4, 4]
}"#;

#[test]
fn converse_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONSTANT_2D);
    let out_dir = dir.path().join("conv");
    let out = weaknoise(&["converse", &cfg, "--delta", "0", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("converse.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["4", "4", "4"]);
    assert!((row[5].parse::<f64>().unwrap() - 0.125).abs() < 1e-15);
    assert!(row[6].parse::<f64>().unwrap() >= 0.125);
    assert_eq!(row[7], "true");
    assert!(out_dir.join("manifest.json").exists());

    let one_d = write_config(dir.path(), "d1.json", NOISELESS);
    assert_eq!(weaknoise(&["converse", &one_d]).status.code(), Some(2));
}

#[test]
fn help_documents_csv_columns() {
    let help = stdout(&weaknoise(&["simulate", "--help"]));
    for col in ["sup_cost", "delta_n", "exponent_theory", "exponent_fit", "converse_bound", "u_hat"] {
        assert!(help.contains(col), "simulate --help lacks {col}");
    }
    let help = stdout(&weaknoise(&["scan", "--help"]));
    assert!(help.contains("is_rollover"));
    let help = stdout(&weaknoise(&["converse", "--help"]));
    assert!(help.contains("locus_length") && help.contains("measured_sup_cost"));
    let help = stdout(&weaknoise(&["sweep", "--help"]));
    assert!(help.contains("gamma") && help.contains("sup_cost"));
}
