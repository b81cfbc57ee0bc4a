use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_multiboltz"));
    c.args(args).env_remove("MULTIBOLTZ_MAX_TRIALS");
    c
}

fn ok_json(args: &[&str]) -> Value {
    let out = cli(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Exit code and parsed `error` object of a failing run.
fn err_json(out: Output) -> (i32, Value) {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(out.stdout.is_empty());
    (out.status.code().unwrap(), v["error"].clone())
}

#[test]
fn sample_with_exact_composition() {
    let v = ok_json(&[
        "sample", "binary", "--n", "20", "--target", "0.5,0.5", "--comp-eps", "0", "--sigma", "1", "--eps", "0",
        "--count", "3", "--seed", "7",
    ]);
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 3);
    for s in samples {
        assert_eq!(s["size"], 20);
        assert_eq!(s["word"].as_array().unwrap().len(), 20);
        assert_eq!(s["occurrences"]["a"], 10);
        assert_eq!(s["occurrences"]["b"], 10);
    }
}

#[test]
fn counts_are_exact() {
    assert_eq!(ok_json(&["count", "dyck", "--n", "8"])["count"], "14");
    assert_eq!(ok_json(&["count", "dyck", "--n", "8", "--profile", "4,4"])["count"], "14");
    assert_eq!(ok_json(&["count", "motzkin", "--n", "6"])["count"], "51");
    assert_eq!(ok_json(&["count", "binary", "--n", "3", "--weights", "2,1"])["count"], "27");
}

#[test]
fn grammar_files_are_read() {
    let dir = std::env::temp_dir().join(format!("multiboltz-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fib.gr");
    std::fs::write(&path, "F = _ | 'a' F | 'b' 'b' F;").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(ok_json(&["count", p, "--n", "10"])["count"], "89");
    let out = dir.join("out.json");
    let status = cli(&["--out", out.to_str().unwrap(), "validate", p]).output().unwrap().status;
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["well_founded"], true);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn singularities_and_tuning() {
    let d = ok_json(&["sing", "dyck"]);
    assert!((d["rho"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let b = ok_json(&["sing", "binary", "--weights", "2,1"]);
    assert!((b["rho"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    let t = ok_json(&["tune", "binary", "--target", "0.7,0.3", "--n", "100"]);
    let w: Vec<f64> = t["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w[0] / w[1] - 7.0 / 3.0).abs() < 1e-5, "{w:?}");
    let p = ok_json(&["predict-trials", "binary", "--n", "100"]);
    assert!((p["expected_trials"].as_f64().unwrap() - 273.0).abs() < 5.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["sample"][..],
        &["frobnicate"],
        &["sample", "binary", "--n", "ten"],
        &["eval", "binary", "--z", "0.1", "--method", "bisection"],
    ] {
        let (code, e) = err_json(cli(args).output().unwrap());
        assert_eq!(code, 2, "{args:?}");
        assert!(e["code"].is_string() && e["message"].is_string(), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_1() {
    let cases: [(&[&str], &str); 4] = [
        (&["sample", "binary", "--n", "10", "--target", "0.5"], "dimension_mismatch"),
        (&["count", "/nonexistent/g.gr", "--n", "3"], "io"),
        (&["tetris", "build", "--width", "1"], "width_out_of_range"),
        (&["tetris", "stats", "--width", "6", "--n", "7"], "area_mismatch"),
    ];
    for (args, code) in cases {
        let (exit, e) = err_json(cli(args).output().unwrap());
        assert_eq!(exit, 1, "{args:?}");
        assert_eq!(e["code"], code, "{args:?}");
    }
}

#[test]
fn trial_limit_comes_from_the_environment() {
    let args = ["sample", "binary", "--n", "200", "--count", "1", "--seed", "1"];
    let out = cli(&args).env("MULTIBOLTZ_MAX_TRIALS", "1").output().unwrap();
    let (exit, e) = err_json(out);
    assert_eq!(exit, 1);
    assert_eq!(e["code"], "trial_limit");
    let (exit, _) = err_json(cli(&args).env("MULTIBOLTZ_MAX_TRIALS", "zero").output().unwrap());
    assert_eq!(exit, 2);
}

#[test]
fn jobs_keep_sample_order() {
    // Worker j draws samples j, j + J, ... from seed + j, so sample 0 comes
    // from the base seed whatever the job count.
    let base = ["--deterministic", "sample", "motzkin", "--n", "30", "--eps", "0.1", "--seed", "11"];
    let one = ok_json(&[&base[..], &["--count", "1"]].concat());
    let four = ok_json(&[&base[..], &["--count", "8", "--jobs", "4"]].concat());
    assert_eq!(one["samples"][0], four["samples"][0]);
    assert_eq!(four["samples"].as_array().unwrap().len(), 8);
    let again = ok_json(&[&base[..], &["--count", "8", "--jobs", "4"]].concat());
    assert_eq!(four, again);
    assert!(four.get("elapsed_ms").is_none());
}

#[test]
fn timing_is_reported_unless_deterministic() {
    assert!(ok_json(&["count", "dyck", "--n", "4"])["elapsed_ms"].is_number());
}

#[test]
fn tetris_pipeline() {
    let b = ok_json(&["tetris", "build", "--width", "4"]);
    assert_eq!((b["states"].as_u64(), b["minimized_states"].as_u64()), (Some(80), Some(78)));
    let dir = std::env::temp_dir().join(format!("multiboltz-tetris-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let samples = dir.join("s.json");
    let status = cli(&[
        "--out", samples.to_str().unwrap(), "tetris", "sample", "--width", "4", "--n", "16", "--count", "2", "--seed", "1",
    ])
    .output()
    .unwrap()
    .status;
    assert!(status.success());
    let svg = dir.join("b.svg");
    let status = cli(&[
        "tetris", "render", "--input", samples.to_str().unwrap(), "--index", "1", "--svg", svg.to_str().unwrap(),
    ])
    .output()
    .unwrap()
    .status;
    assert!(status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml") || text.starts_with("<svg"));
    assert!(text.matches("<rect").count() >= 16 * 4);
    std::fs::remove_dir_all(&dir).unwrap();
}
