use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sturm-metric"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn forge_and_metric_dressed_pass() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        run_in(
            d,
            &["forge", "dressed", "--n", "8", "--seed", "42", "--out", "m.json"]
        )
        .status
        .code(),
        Some(0)
    );
    let model = json(&d.join("m.json"));
    assert_eq!(model["n"], 8);
    assert_eq!(model["provenance"], "dressed");
    assert_eq!(model["seed"], 42);
    assert_eq!(model["H"].as_array().unwrap().len(), 64);
    assert!(d.join("m.truth.json").exists());

    let o = run_in(
        d,
        &["metric", "m.json", "--truncate", "t.csv", "--out", "r.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&d.join("r.json"));
    assert_eq!(r["verdict"], "pass");
    for m in r["metrics"].as_array().unwrap() {
        for key in ["hermiticityResidual", "intertwineH", "intertwineW"] {
            assert!(m[key].as_f64().unwrap() <= 1e-9, "{key}: {}", m[key]);
        }
        assert_eq!(m["thetaDefiniteness"], "positive");
    }
    assert_eq!(r["groundTruth"]["allPositiveParallel"], true);
    assert!(r["dressing"]["isospectralityDefect"].as_f64().unwrap() <= 1e-9);
    assert!(r.get("wallTimeSeconds").is_none());

    let csv = fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
    assert!(csv.starts_with("k,hermiticityResidual"));
}

#[test]
fn incompatible_model_fails_verification() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        run_in(d, &["forge", "incompatible", "--out", "inc.json"])
            .status
            .code(),
        Some(0)
    );
    let model = json(&d.join("inc.json"));
    assert_eq!(model["label"], "incompatible-2x2");
    assert_eq!(
        model["H"],
        serde_json::json!([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
    );
    assert_eq!(
        model["W"],
        serde_json::json!([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    );

    let o = run_in(
        d,
        &[
            "metric", "inc.json", "--method", "single", "--out", "r.json",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let r = json(&d.join("r.json"));
    let single = &r["metrics"][0];
    assert!((single["hermiticityMax"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(single["hermiticityResidual"].as_f64().unwrap() > 0.1);
    assert!(r.get("dressing").is_none());
}

#[test]
fn singular_weight_is_a_numerical_failure() {
    let o = bin()
        .arg("metric")
        .arg(data("singular_w.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("SingularWeight"), "{}", stderr(&o));
}

#[test]
fn complex_spectrum_is_a_numerical_failure() {
    let o = bin()
        .arg("metric")
        .arg(data("complex_spectrum.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ComplexSpectrum"));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let malformed = bin()
        .arg("metric")
        .arg(data("malformed.json"))
        .output()
        .unwrap();
    assert_eq!(malformed.status.code(), Some(2));
    assert!(stderr(&malformed).contains("MalformedFile"));

    fs::write(d.join("junk.json"), "{ not json").unwrap();
    assert_eq!(run_in(d, &["metric", "junk.json"]).status.code(), Some(2));
    assert_eq!(
        run_in(d, &["metric", "missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run_in(d, &["forge", "dressed", "--out", "x.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_in(d, &["forge", "sideways", "--out", "x.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run_in(d, &["frobnicate"]).status.code(), Some(2));

    run_in(
        d,
        &[
            "forge", "dressed", "--n", "4", "--seed", "1", "--out", "m.json",
        ],
    );
    let bad_weights = run_in(d, &["metric", "m.json", "--weights", "1,2"]);
    assert_eq!(bad_weights.status.code(), Some(2));
    let neg_weights = run_in(d, &["metric", "m.json", "--weights", "1,-1,1,1"]);
    assert_eq!(neg_weights.status.code(), Some(2));
    assert!(stderr(&neg_weights).contains("NonpositiveWeight"));

    let grid = run_in(d, &["liouville", "--n", "2"]);
    assert_eq!(grid.status.code(), Some(2));
    assert!(stderr(&grid).contains("GridTooSmall"));
    assert_eq!(
        run_in(d, &["liouville", "--n", "50", "--map", "log"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_in(d, &["liouville", "--n", "50", "--domain", "-1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_in(d, &["liouville", "--n", "500", "--metric"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn help_exits_zero() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn liouville_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = run_in(
        d,
        &[
            "liouville",
            "--potential",
            "poly:0,1,1",
            "--map",
            "identity",
            "--domain",
            "-3,3",
            "--n",
            "100",
            "--out",
            "id.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&d.join("id.json"));
    assert_eq!(r["comparison"]["maxRelativeDifference"].as_f64(), Some(0.0));

    let o = run_in(
        d,
        &[
            "liouville",
            "--potential",
            "harmonic",
            "--map",
            "exp",
            "--domain",
            "0.02,8",
            "--n",
            "4000",
            "--k",
            "3",
            "--tol",
            "5e-3",
            "--refine",
            "--out",
            "exp.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&d.join("exp.json"));
    assert!(r["comparison"]["maxRelativeDifference"].as_f64().unwrap() <= 5e-3);
    for ratio in r["refinement"]["ratios"].as_array().unwrap() {
        assert!(ratio.as_f64().unwrap() >= 2.0);
    }

    let o = run_in(
        d,
        &[
            "liouville",
            "--map",
            "cubic",
            "--domain",
            "-4,4",
            "--n",
            "60",
            "--k",
            "2",
            "--tol",
            "0.1",
            "--metric",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["sturmianMetric"]["identityDefect"].as_f64().unwrap() <= 1e-9);

    let strict = run_in(d, &["liouville", "--n", "100", "--tol", "1e-9"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for out in ["a.json", "b.json"] {
        run_in(
            d,
            &[
                "forge",
                "hermitian",
                "--n",
                "4",
                "--seed",
                "7",
                "--out",
                out,
            ],
        );
    }
    assert_eq!(
        fs::read(d.join("a.json")).unwrap(),
        fs::read(d.join("b.json")).unwrap()
    );

    run_in(
        d,
        &[
            "forge", "dressed", "--n", "6", "--seed", "5", "--out", "m.json",
        ],
    );
    let first = fs::read(d.join("m.json")).unwrap();
    run_in(
        d,
        &[
            "forge", "dressed", "--n", "6", "--seed", "5", "--out", "m.json",
        ],
    );
    assert_eq!(first, fs::read(d.join("m.json")).unwrap());

    let args = ["metric", "m.json", "--weights", "1,1,1,1,1,1"];
    let a = run_in(d, &args);
    let b = run_in(d, &args);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);

    let timed = run_in(d, &["metric", "m.json", "--timing"]);
    let r: Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(r["wallTimeSeconds"].as_f64().unwrap() >= 0.0);
}
