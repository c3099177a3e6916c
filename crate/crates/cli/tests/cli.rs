use std::{
    fs,
    path::Path,
    process::{Command, Output},
};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvspec"))
        .args(args)
        .output()
        .expect("spawn hvspec")
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{args:?}: {e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    });
    (out.status.code().unwrap(), v)
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn factorizable_model() -> Value {
    json!({
        "channel_count": 3,
        "lambda_range": [500e-9, 650e-9],
        "weights": [0.3, 0.5, 0.2],
        "kind": "factorizable",
        "p_a": {"alpha": [0.9, 0.4, 0.1], "alpha_prime": [0.2, 0.8, 0.6]},
        "p_b": {"beta": [0.5, 0.5, 0.9], "beta_prime": [0.7, 0.1, 0.3]}
    })
}

fn qm_model() -> Value {
    json!({
        "channel_count": 4,
        "lambda_range": [0.0, 1.0],
        "weights": [0.25, 0.25, 0.25, 0.25],
        "kind": "qm_channel",
        "r": 0.1f64.sqrt(),
        "quad": quad()
    })
}

fn quad() -> Value {
    json!({"alpha": 1.0585274, "alpha_prime": std::f64::consts::FRAC_PI_2, "beta": 0.0, "beta_prime": -0.5122689})
}

fn write_config(dir: &Path, model: Value, n: u64, seed: u64) -> String {
    let cfg = json!({
        "model": model,
        "quad": quad(),
        "N": n,
        "timing": {"T": 1e-6, "jitter": 1e-8, "window": 2.5e-7},
        "seed": seed,
        "output_dir": "out"
    });
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn qm_eval_examples() {
    let (c, v) = run_json(&[
        "qm",
        "eval",
        "--r2",
        "0.1",
        "--quad",
        "1.058306,1.570796,0,-0.512316",
    ]);
    assert_eq!(c, 0);
    assert!((v["J"].as_f64().unwrap() - 0.047227).abs() < 1e-4);
    assert_eq!(v["r2"].as_f64(), Some(0.1));
    assert_eq!(v["quad"]["beta_prime"].as_f64(), Some(-0.512316));
    assert!(v["terms"]["P_AB(alpha,beta')"].as_f64().unwrap() < 1e-6);

    let (c, v) = run_json(&["qm", "eval", "--r2", "0", "--quad", "0,0,0,0"]);
    assert_eq!(c, 0);
    assert_eq!(v["J"].as_f64(), Some(-1.0));
}

#[test]
fn qm_scan_finds_violation() {
    let (c, v) = run_json(&["qm", "scan", "--r2", "0.1", "--grid", "12"]);
    assert_eq!(c, 0);
    assert!(v["J"].as_f64().unwrap() >= 0.04);
    let trace: Vec<f64> = serde_json::from_value(v["trace"].clone()).unwrap();
    assert!(trace.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn malformed_arguments_exit_2() {
    assert_eq!(code(&["qm", "eval", "--r2", "0.1", "--quad", "1,2,3"]), 2);
    assert_eq!(code(&["qm", "eval", "--r2", "-1", "--quad", "1,2,3,4"]), 2);
    assert_eq!(code(&["qm", "eval", "--quad", "1,2,3,4"]), 2);
    assert_eq!(code(&["qm", "scan", "--r2", "0.1", "--grid", "2"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(
        code(&["maximize", "--singles", "uniform:K=4", "--n", "100"]),
        2
    );
    let out = run(&["qm", "eval", "--r2", "0.1", "--quad", "a,b,c,d"]);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_files_exit_3() {
    assert_eq!(code(&["analyze", "/nonexistent/counts.json"]), 3);
    assert_eq!(code(&["simulate", "/nonexistent/config.json"]), 3);
    assert_eq!(
        code(&[
            "match",
            "--a",
            "/nonexistent/a.csv",
            "--b",
            "/nonexistent/b.csv",
            "--window",
            "1"
        ]),
        3
    );
}

#[test]
fn simulate_zero_pairs_writes_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), factorizable_model(), 0, 1);
    let (c, v) = run_json(&["simulate", &cfg]);
    assert_eq!(c, 0);
    assert!(v["J"].is_null());
    let counts: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/counts.json")).unwrap())
            .unwrap();
    assert_eq!(counts["N"], 0);
    assert_eq!(counts["K"], 3);
    for label in ["AB", "ABp", "ApB", "ApBp"] {
        assert_eq!(counts[label]["singles_A"], json!([0, 0, 0]));
        assert_eq!(counts[label]["coincidences"], json!([0, 0, 0]));
        assert_eq!(counts[label]["noise"], 0);
    }
    let events = fs::read_to_string(dir.path().join("out/run_AB/events_A.csv")).unwrap();
    assert_eq!(events, "timestamp,channel\n");
}

#[test]
fn simulate_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), factorizable_model(), 20_000, 7);
    let other = dir.path().join("again");
    assert_eq!(code(&["simulate", &cfg]), 0);
    assert_eq!(
        code(&["simulate", &cfg, "--out", other.to_str().unwrap()]),
        0
    );
    let out = dir.path().join("out");
    for name in [
        "counts.json",
        "report.json",
        "spectrum.csv",
        "run_ApBp/events_B.csv",
        "run_AB/meta.json",
    ] {
        assert_eq!(
            fs::read(out.join(name)).unwrap(),
            fs::read(other.join(name)).unwrap(),
            "{name}"
        );
    }
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_ApB/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["pair"], "ApB");
    assert_eq!(meta["N"], 20_000);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["run_index"], 2);
    assert_eq!(meta["timing"]["window"].as_f64(), Some(2.5e-7));

    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = spectrum.lines();
    assert_eq!(lines.next(), Some("pair,channel,N_A,N_B,N_AB"));
    assert_eq!(lines.count(), 12);

    let reseeded = dir.path().join("reseeded");
    assert_eq!(
        code(&[
            "simulate",
            &cfg,
            "--seed",
            "8",
            "--out",
            reseeded.to_str().unwrap()
        ]),
        0
    );
    assert_ne!(
        fs::read(out.join("counts.json")).unwrap(),
        fs::read(reseeded.join("counts.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    let mut cfg: Value = serde_json::from_str(
        &fs::read_to_string(write_config(dir.path(), factorizable_model(), 10, 1)).unwrap(),
    )
    .unwrap();
    cfg["colour"] = json!("blue");
    fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(code(&["simulate", path.to_str().unwrap()]), 2);

    cfg.as_object_mut().unwrap().remove("colour");
    cfg["timing"]["window"] = json!(1e-9);
    fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(code(&["simulate", path.to_str().unwrap()]), 2);

    cfg["timing"]["window"] = json!(2.5e-7);
    cfg["model"]["weights"] = json!([0.5, 0.5, 0.5]);
    fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(code(&["simulate", path.to_str().unwrap()]), 2);

    fs::write(&path, "{not json").unwrap();
    assert_eq!(code(&["simulate", path.to_str().unwrap()]), 2);
}

#[test]
fn factorizable_table_satisfies_ch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), factorizable_model(), 100_000, 3);
    assert_eq!(code(&["simulate", &cfg]), 0);
    let counts = dir.path().join("out/counts.json");
    let (c, v) = run_json(&["analyze", counts.to_str().unwrap()]);
    assert_eq!(c, 0, "{v}");
    assert_eq!(v["verdicts"]["CH"], true);
    assert_eq!(v["verdicts"]["spectrograph"], true);
    assert!(v["J"].as_f64().unwrap() <= 0.0);
    assert_eq!(
        fs::read_to_string(dir.path().join("out/report.json")).unwrap(),
        String::from_utf8(run(&["analyze", counts.to_str().unwrap()]).stdout).unwrap()
    );

    let (c, v) = run_json(&["audit", counts.to_str().unwrap()]);
    assert_eq!(c, 0);
    assert_eq!(v["passes"], true);
    assert_eq!(v["totals"].as_array().unwrap().len(), 8);
}

#[test]
fn qm_table_breaks_ch_but_not_spectrograph_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), qm_model(), 200_000, 11);
    assert_eq!(code(&["simulate", &cfg]), 0);
    let counts = dir.path().join("out/counts.json");
    let (c, v) = run_json(&["analyze", counts.to_str().unwrap()]);
    assert_eq!(c, 1);
    assert!(v["J"].as_f64().unwrap() > 0.0);
    assert!(v["correction"].as_f64().unwrap() > 0.0);
    assert_eq!(v["verdicts"]["CH"], false);
    assert_eq!(v["verdicts"]["spectrograph"], true);
    assert_eq!(v["verdicts"]["residuals"], true);
    assert!(!v["gamma2"].as_array().unwrap().is_empty());
}

#[test]
fn match_agrees_with_simulated_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), qm_model(), 5_000, 2);
    assert_eq!(code(&["simulate", &cfg]), 0);
    let out = dir.path().join("out");
    let counts: Value =
        serde_json::from_str(&fs::read_to_string(out.join("counts.json")).unwrap()).unwrap();
    for label in ["AB", "ApBp"] {
        let a = out.join(format!("run_{label}/events_A.csv"));
        let b = out.join(format!("run_{label}/events_B.csv"));
        let (c, v) = run_json(&[
            "match",
            "--a",
            a.to_str().unwrap(),
            "--b",
            b.to_str().unwrap(),
            "--window",
            "2.5e-7",
            "--channels",
            "4",
        ]);
        assert_eq!(c, 0);
        assert_eq!(v["coincidences"], counts[label]["coincidences"]);
        assert_eq!(v["singles_A"], counts[label]["singles_A"]);
        assert_eq!(v["discards"], 0);
        assert_eq!(v["window"].as_f64(), Some(2.5e-7));
    }
}

#[test]
fn match_counts_cross_channel_noise() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "timestamp,channel\n0.0,0\n1.0,1\n2.0,2\n").unwrap();
    fs::write(&b, "timestamp,channel\n0.05,0\n1.05,2\n5.0,1\n").unwrap();
    let (c, v) = run_json(&[
        "match",
        "--a",
        a.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--window",
        "0.1",
    ]);
    assert_eq!(c, 0);
    assert_eq!(v["K"], 3);
    assert_eq!(v["matches"], 1);
    assert_eq!(v["discards"], 1);
    assert_eq!(v["unmatched_A"], 1);
    assert_eq!(v["unmatched_B"], 1);
    assert_eq!(v["coincidences"], json!([1, 0, 0]));

    fs::write(&b, "timestamp,channel\n1.0,0\n0.5,0\n").unwrap();
    assert_eq!(
        code(&[
            "match",
            "--a",
            a.to_str().unwrap(),
            "--b",
            b.to_str().unwrap(),
            "--window",
            "0.1"
        ]),
        2
    );
}

fn bad_counts() -> Value {
    let run = json!({"singles_A": [3, 2], "singles_B": [3, 1], "coincidences": [1, 2], "noise": 0});
    let ok = json!({"singles_A": [3, 2], "singles_B": [3, 1], "coincidences": [1, 1], "noise": 0});
    json!({"K": 2, "N": 10, "AB": ok, "ABp": ok, "ApB": run, "ApBp": ok})
}

#[test]
fn audit_reports_coincidence_bound_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_counts.json");
    fs::write(&path, bad_counts().to_string()).unwrap();
    let (c, v) = run_json(&["audit", path.to_str().unwrap()]);
    assert_eq!(c, 1);
    assert_eq!(v["passes"], false);
    let violations = v["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["feature"], 3);
    assert_eq!(violations[0]["pair"], "ApB");
    assert_eq!(violations[0]["channel"], 1);

    let (c, v) = run_json(&["analyze", path.to_str().unwrap()]);
    assert_eq!(c, 1);
    assert_eq!(v["audit"]["passes"], false);
}

#[test]
fn maximize_examples() {
    let (c, v) = run_json(&["maximize", "--singles", "uniform:K=4,s=25", "--n", "100"]);
    assert_eq!(c, 0);
    assert_eq!(v["J_max"].as_f64(), Some(1.0));
    assert_eq!(v["audit_passes"], true);
    assert_eq!(v["table"]["ABp"]["coincidences"], json!([0, 0, 0, 0]));
    assert_eq!(v["table"]["AB"]["coincidences"], json!([25, 25, 25, 25]));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singles.json");
    let run = json!({"singles_A": [1, 4], "singles_B": [2, 3]});
    fs::write(
        &path,
        json!({"AB": run, "ABp": run, "ApB": run, "ApBp": run}).to_string(),
    )
    .unwrap();
    let (c, v) = run_json(&["maximize", "--singles", path.to_str().unwrap(), "--n", "10"]);
    assert_eq!(c, 0);
    // (1+3) + (1+3) + (1+3) − (2+3) − (1+4) = 2
    assert_eq!(v["J_max"].as_f64(), Some(0.2));

    assert_eq!(
        code(&["maximize", "--singles", "uniform:K=4,s=25", "--n", "50"]),
        2
    );
}

#[test]
fn reports_use_seventeen_significant_digits() {
    let out = run(&["qm", "eval", "--r2", "0.1", "--quad", "1,2,3,4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let r2_line = text.lines().find(|l| l.contains("\"r2\"")).unwrap();
    assert!(r2_line.contains("1.0000000000000001e-1"), "{r2_line}");
}
