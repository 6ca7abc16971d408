use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use icl_core::calibration::{calibration_report, ForecastProfile};
use icl_core::cli::CounterexampleFixture;
use icl_core::oracle::Instance;
use icl_core::{icl_fit, FiniteSpace, Preorder};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn icl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icl"))
        .args(args)
        .env_remove("ICL_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn fit_reproduces_the_chain_fixture() {
    let csv = fixture("chain.csv");
    let report = json(&icl(&["fit", csv.to_str().unwrap(), "--order", "column:x"]));
    let frozen: Value =
        serde_json::from_str(&fs::read_to_string(fixture("chain_fit.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "icl/1");
    assert_eq!(report["command"], "fit");
    assert_eq!(report["result"], frozen["result"]);
    assert_eq!(
        report["result"]["cdf_matrix"],
        serde_json::json!([[0.5, 1.0, 1.0], [0.5, 1.0, 1.0], [0.0, 0.0, 1.0]])
    );
}

#[test]
fn reports_are_deterministic() {
    let csv = fixture("chain.csv");
    let a = json(&icl(&["fit", csv.to_str().unwrap()]));
    let b = json(&icl(&["fit", csv.to_str().unwrap()]));
    assert_eq!(without_timing(a), without_timing(b));
    let v1 = json(&icl(&["verify", "--suite", "hierarchy", "--count", "30"]));
    let v2 = json(&icl(&["verify", "--suite", "hierarchy", "--count", "30"]));
    assert_eq!(without_timing(v1), without_timing(v2));
}

#[test]
fn score_of_the_chain_fit() {
    let dir = TempDir::new().unwrap();
    let csv = fixture("chain.csv");
    let fit_path = dir.path().join("fit.json");
    let out = icl(&[
        "fit",
        csv.to_str().unwrap(),
        "--out",
        fit_path.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    let score = json(&icl(&[
        "score",
        csv.to_str().unwrap(),
        fit_path.to_str().unwrap(),
    ]));
    let r = &score["result"];
    assert!((r["mean_crps"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!((r["mean_crps_quantile"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(r["quantile_scores"].as_array().unwrap().len(), 19);
    assert_eq!(r["brier"][0]["at"], 0.0);
}

#[test]
fn calibrate_round_trip_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        dir.path(),
        "d.csv",
        "a,b,y\n0,0,1\n1,0,0\n0,1,2\n1,1,1\n2,2,3\n",
    );
    let fit_path = dir.path().join("fit.json");
    assert!(icl(&["fit", &csv, "--out", fit_path.to_str().unwrap()])
        .status
        .success());
    let report = json(&icl(&["calibrate", &csv, fit_path.to_str().unwrap()]));
    let flags = &report["result"]["flags"];

    let space = FiniteSpace::uniform(5).unwrap();
    let order = Preorder::from_pairs(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
    let y = vec![1.0, 0.0, 2.0, 1.0, 3.0];
    let fit = icl_fit(&space, &order, &y).unwrap();
    let lib =
        calibration_report(&ForecastProfile::new(space, fit.rows().to_vec(), y).unwrap()).unwrap();
    assert_eq!(flags["auto"], lib.auto.holds);
    assert_eq!(flags["isotonic"], true);
    assert_eq!(flags["threshold"], true);
    assert_eq!(flags["quantile"], true);
    assert_eq!(flags["pit"], true);
    assert_eq!(report["result"]["hierarchy_holds"], true);
}

fn profile_to_files(dir: &Path, name: &str) -> (String, String) {
    let fx = CounterexampleFixture::from_json(&fs::read_to_string(fixture(name)).unwrap()).unwrap();
    let Instance::Profile {
        weights,
        forecasts,
        y,
    } = fx.counterexample.instance
    else {
        panic!("not a profile fixture");
    };
    let mut csv = String::from("x,w,y\n");
    for (i, (w, v)) in weights.iter().zip(&y).enumerate() {
        csv.push_str(&format!("{i},{w},{v}\n"));
    }
    (
        write(dir, "data.csv", &csv),
        write(
            dir,
            "forecasts.json",
            &serde_json::to_string(&forecasts).unwrap(),
        ),
    )
}

#[test]
fn calibrate_frozen_counterexamples() {
    let dir = TempDir::new().unwrap();
    let (csv, fc) = profile_to_files(dir.path(), "ic-without-ac.json");
    let r = json(&icl(&["calibrate", &csv, &fc, "--weights", "w"]));
    assert_eq!(r["result"]["flags"]["auto"], false);
    assert_eq!(r["result"]["flags"]["isotonic"], true);
    assert!(r["result"]["checks"]["auto"]["witness"].is_object());

    let (csv, fc) = profile_to_files(dir.path(), "tcqc-without-ic.json");
    let r = json(&icl(&["calibrate", &csv, &fc, "--weights", "w"]));
    assert_eq!(r["result"]["flags"]["isotonic"], false);
    assert_eq!(r["result"]["flags"]["threshold"], true);
    assert_eq!(r["result"]["flags"]["quantile"], true);
}

#[test]
fn edge_file_order() {
    let dir = TempDir::new().unwrap();
    let csv = write(dir.path(), "d.csv", "x,y\n0,2\n0,0\n0,1\n");
    let edges = write(dir.path(), "e.txt", "0 1\n0 2\n");
    let r = json(&icl(&["fit", &csv, "--order", &format!("file:{edges}")]));
    let third = 2.0 / 3.0;
    let expected = [[0.5, third, 1.0], [0.5, third, 1.0], [0.0, third, 1.0]];
    let got = r["result"]["cdf_matrix"].as_array().unwrap();
    for (row, want) in got.iter().zip(expected) {
        for (v, w) in row.as_array().unwrap().iter().zip(want) {
            assert!((v.as_f64().unwrap() - w).abs() < 1e-12);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "x,y\n1,oops\n");
    assert_eq!(icl(&["fit", &bad]).status.code(), Some(2));
    assert_eq!(
        icl(&["fit", "/nonexistent/data.csv"]).status.code(),
        Some(2)
    );
    let no_y = write(dir.path(), "no_y.csv", "x,z\n1,2\n");
    assert_eq!(icl(&["fit", &no_y]).status.code(), Some(3));
    let ok = write(dir.path(), "ok.csv", "x,y\n1,2\n");
    let out = icl(&["fit", &ok, "--order", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown order"));
    let edges = write(dir.path(), "e.txt", "0 5\n");
    assert_eq!(
        icl(&["fit", &ok, "--order", &format!("file:{edges}")])
            .status
            .code(),
        Some(3)
    );
    let fc = write(
        dir.path(),
        "f.json",
        r#"[{"points":[1.0],"cum":[1.0]},{"points":[1.0],"cum":[1.0]}]"#,
    );
    assert_eq!(icl(&["score", &ok, &fc]).status.code(), Some(3));
    assert_eq!(icl(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_lists_instance_seeds() {
    let r = json(&icl(&[
        "verify", "--suite", "oracle", "--n", "6", "--seed", "42", "--count", "25",
    ]));
    assert_eq!(r["result"]["passed"], true);
    let seeds: Vec<u64> = r["result"]["instances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, (42..67).collect::<Vec<u64>>());
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_icl"))
        .args(["verify", "--suite", "hierarchy", "--count", "3"])
        .env("ICL_SEED", "1000")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 1000);
    let out = Command::new(env!("CARGO_BIN_EXE_icl"))
        .args([
            "verify",
            "--suite",
            "hierarchy",
            "--count",
            "3",
            "--seed",
            "5",
        ])
        .env("ICL_SEED", "1000")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 5);
}

#[test]
fn verify_suites_pass() {
    for suite in ["universality", "counterexamples"] {
        let r = json(&icl(&[
            "verify",
            "--suite",
            suite,
            "--count",
            "20",
            "--members",
            "100",
        ]));
        assert_eq!(r["result"]["passed"], true, "{suite}");
    }
}
