use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcoord::config::{builtin, ModelFile};

fn qcoord(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcoord"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn config(command: &str, model: &str, extra: &str) -> String {
    format!(r#"{{"schema": "qcoord.experiment/1", "command": "{command}", "model": {model}{extra}}}"#)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(str::to_string).collect()];
    for rec in r.records() {
        rows.push(rec.unwrap().iter().map(str::to_string).collect());
    }
    rows
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = rows[0].iter().position(|h| h == name).unwrap();
    rows[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

#[test]
fn rate_prints_and_records_the_decomposition_b_rate() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "rate.json",
        &config("rate", r#"{"builtin": "example1-b"}"#, ""),
    );
    let out = qcoord(&["rate", "--config", "rate.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.311278"));

    let rows = read_csv(&dir.path().join("o/rate.csv"));
    assert_eq!(rows[0], ["config_hash", "kind", "r12", "r23"]);
    let r: f64 = rows[1][2].parse().unwrap();
    assert!((r - (h(0.25) - 0.5)).abs() < 1e-12);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap(), rows[1][0]);
    assert_eq!(manifest["library_version"], qcoord::VERSION);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["artifacts"][0], "rate.csv");
}

#[test]
fn malformed_config_exits_with_parse_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        "{ not json",
        &config("rate", r#"{"builtin": "example1-b"}"#, r#", "colour": "red""#),
        &config("simulate", r#"{"builtin": "example1-b"}"#, ""),
        &config("rate", r#"{"builtin": "no-such-model"}"#, ""),
        &config("rate", r#"{"builtin": "example1-b", "param": 0.2}"#, ""),
    ]
    .iter()
    .enumerate()
    {
        let name = format!("bad{i}.json");
        write(dir.path(), &name, text);
        let out = qcoord(&["--config", &name, "--out", "o", "--quiet"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
        assert_eq!(err["error"], "parse");
        assert!(!dir.path().join("o").exists());
    }
    write(
        dir.path(),
        "ok.json",
        &config("rate", r#"{"builtin": "example1-b"}"#, ""),
    );
    let out = qcoord(&["simulate", "--config", "ok.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2), "command mismatch");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_model_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", &config("rate", r#"{"path": "absent.json"}"#, ""));
    let out = qcoord(&["--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn model_files_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("conf")).unwrap();
    write(
        &dir.path().join("conf"),
        "m.json",
        &builtin("example2", Some(0.1)).unwrap().to_json(),
    );
    write(
        &dir.path().join("conf"),
        "c.json",
        &config("rate", r#"{"path": "m.json"}"#, ""),
    );
    let out = qcoord(&["--config", "conf/c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = column(&read_csv(&dir.path().join("o/rate.csv")), "r12")[0];
    assert!((r - (1.0 - h(0.1))).abs() < 1e-9);
}

#[test]
fn mismatched_extension_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let ext = builtin("example1-a", None).unwrap();
    let ens = builtin("example2", Some(0.2)).unwrap();
    let mixed = ModelFile {
        ensemble: ens
            .extension()
            .unwrap()
            .map(|e| e.induced_ensemble().unwrap())
            .map(|e| ModelFile::from_parts(Some(&e), None).ensemble.unwrap()),
        ..ext
    };
    let inline = format!(r#"{{"inline": {}}}"#, serde_json::to_string(&mixed).unwrap());
    write(dir.path(), "c.json", &config("rate", &inline, ""));
    let out = qcoord(&["--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn oversized_explicit_codebook_hits_the_resource_cap() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#", "simulation": {"n": [400], "rate": [0.46], "delta": 0.02, "trials": 2, "engine": "explicit"}"#;
    write(
        dir.path(),
        "c.json",
        &config("simulate", r#"{"builtin": "example1-b"}"#, sim),
    );
    let out = qcoord(&["--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn simulation_csv_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#", "seed": 3, "simulation": {"n": [200, 400, 800], "rate": [0.46], "delta": 0.02, "trials": 40}"#;
    write(
        dir.path(),
        "c.json",
        &config("simulate", r#"{"builtin": "example1-b"}"#, sim),
    );
    for out_dir in ["a", "b"] {
        let out = qcoord(
            &["--config", "c.json", "--out", out_dir, "--quiet", "--threads", "2"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let out = qcoord(
        &["--config", "c.json", "--out", "c", "--seed", "4", "--quiet"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    for name in ["summary.csv", "traces.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        let c = std::fs::read(dir.path().join("c").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
        assert_ne!(a, c, "{name}");
    }
    let summary = read_csv(&dir.path().join("a/summary.csv"));
    assert_eq!(summary.len(), 4);
    assert_eq!(column(&summary, "n"), [200.0, 400.0, 800.0]);
    let medians = column(&summary, "median");
    let q25 = column(&summary, "q25");
    let q75 = column(&summary, "q75");
    for i in 0..3 {
        assert!(q25[i] <= medians[i] && medians[i] <= q75[i]);
    }
    let traces = read_csv(&dir.path().join("a/traces.csv"));
    assert_eq!(traces.len(), 1 + 3 * 40);
    let hash = &summary[1][0];
    assert!(traces[1..].iter().all(|r| &r[0] == hash));
}

#[test]
fn derandomize_and_converse_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sim = r#", "seed": 1, "simulation": {"n": [400], "rate": [0.46], "delta": 0.02, "trials": 20}"#;
    let derand = format!(r#"{sim}, "derandomize": {{"seeds": 5}}"#);
    write(
        dir.path(),
        "d.json",
        &config("derandomize", r#"{"builtin": "example1-b"}"#, &derand),
    );
    let out = qcoord(&["--config", "d.json", "--out", "d", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let seeds = read_csv(&dir.path().join("d/seeds.csv"));
    assert_eq!(seeds.len(), 6);
    let summary = read_csv(&dir.path().join("d/derandomize.csv"));
    let best = column(&summary, "selected_distance")[0];
    assert!(column(&seeds, "mean_distance").iter().all(|&d| d >= best));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 5);

    let conv = format!(r#"{sim}, "converse": {{"slack": 0.02}}"#);
    write(
        dir.path(),
        "v.json",
        &config("converse", r#"{"builtin": "example1-b"}"#, &conv),
    );
    let out = qcoord(&["--config", "v.json", "--out", "v", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_csv(&dir.path().join("v/converse.csv"));
    assert_eq!(column(&summary, "violations"), [0.0]);
    assert_eq!(read_csv(&dir.path().join("v/converse_checks.csv")).len(), 21);
}

#[test]
fn p_sweep_matches_the_binary_entropy_formula() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#", "sweep": {"parameter": "p", "values": [0.1, 0.2, 0.3, 0.4, 0.5]}"#;
    write(
        dir.path(),
        "c.json",
        &config("sweep", r#"{"builtin": "example2"}"#, sweep),
    );
    let out = qcoord(&["--config", "c.json", "--out", "o", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("o/sweep.csv"));
    for (p, r) in column(&rows, "p").into_iter().zip(column(&rows, "r12")) {
        assert!((r - (1.0 - h(p))).abs() < 1e-9, "p = {p}: {r}");
    }
    assert_eq!(rows.last().unwrap()[3], "0");
}

#[test]
fn lambda_sweep_trades_the_two_links() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#", "sweep": {"parameter": "lambda", "values": [4, 2, 1, 0.5, 0.25, 0]}"#;
    write(
        dir.path(),
        "c.json",
        &config("sweep", r#"{"builtin": "bsc-cascade", "param": 0.1}"#, sweep),
    );
    let out = qcoord(&["--config", "c.json", "--out", "o", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("o/sweep.csv"));
    // Lowering the weight on I(X;Z) can only lower I(X;YZ) and raise I(X;Z).
    let r12 = column(&rows, "r12");
    let r23 = column(&rows, "r23");
    for w in r12.windows(2) {
        assert!(w[1] <= w[0] + 1e-7, "{r12:?}");
    }
    for w in r23.windows(2) {
        assert!(w[1] >= w[0] - 1e-7, "{r23:?}");
    }
}

#[test]
fn empty_sweep_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#", "sweep": {"parameter": "p", "values": []}"#;
    write(
        dir.path(),
        "c.json",
        &config("sweep", r#"{"builtin": "example2"}"#, sweep),
    );
    let out = qcoord(&["--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn optimize_writes_a_loadable_extension() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        &config("optimize", r#"{"builtin": "example1"}"#, ""),
    );
    let out = qcoord(&["--config", "c.json", "--out", "o", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let value = column(&read_csv(&dir.path().join("o/optimize.csv")), "value")[0];
    assert!(value <= 0.3113 + 1e-3);
    let text = std::fs::read_to_string(dir.path().join("o/extension.json")).unwrap();
    let v = ModelFile::parse(&text).unwrap().validated().unwrap();
    let r = qcoord::model::two_node_rate(&v).unwrap();
    assert!((r - value).abs() < 1e-9);
    assert!(read_csv(&dir.path().join("o/candidates.csv")).len() > 1);
}
