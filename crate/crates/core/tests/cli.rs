//! End-to-end checks of the `moogvcf` binary: formats, golden files and
//! the exit-code contract of every subcommand.

use std::path::PathBuf;
use std::process::{Command, Output};

use moog_lyapunov::cli::{run_with_hooks, Hooks};
use moog_lyapunov::lyapunov::grad_v;
use moog_lyapunov::model::{FilterParams, ScaledState};

fn moogvcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moogvcf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn write_spec(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn eig_at_zero_resonance() {
    let o = moogvcf(&["eig", "--omega0", "1", "--r", "0"]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    assert_eq!(t.len(), 6);
    for row in &t[1..5] {
        let v: Vec<f64> = row[1..].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(v, vec![-1.0, 0.0, -1.0, 0.0]);
    }
}

#[test]
fn eig_at_full_resonance() {
    let o = moogvcf(&["eig", "--omega0", "1", "--r", "1"]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    let expected = [(0.0, 1.0), (-2.0, 1.0), (-2.0, -1.0), (0.0, -1.0)];
    for (row, (re, im)) in t[1..5].iter().zip(expected) {
        let v: Vec<f64> = row[1..].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!((v[0], v[1]), (re, im));
        assert!((v[2] - re).abs() < 1e-10 && (v[3] - im).abs() < 1e-10, "{row:?}");
    }
    assert_eq!(t[5][0], "max_re");
}

#[test]
fn eig_rejects_out_of_range_resonance() {
    let o = moogvcf(&["eig", "--omega0", "1", "--r", "1.5"]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("r = 1.5"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn eig_json_output() {
    let o = moogvcf(&["eig", "--omega0", "1", "--r", "0.5", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["closed"].as_array().unwrap().len(), 4);
}

#[test]
fn certify_finds_the_as_threshold() {
    let o = moogvcf(&["certify", "--families", "As", "--r-grid", "0:1:0.01"]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    assert_eq!(t[0], ["family", "omega0", "r", "min_eig", "max_eig", "verdict"]);
    let th = t.iter().find(|r| r[0] == "threshold").expect("threshold row");
    assert_eq!(th[1], "As");
    let r_star: f64 = th[2].parse().unwrap();
    assert!((r_star - 5.0 / 12.0).abs() < 1e-6);
    assert_eq!((th[3].as_str(), th[4].as_str()), ("0.41", "0.42"));
}

#[test]
fn certify_bs_is_definite_below_one() {
    let o = moogvcf(&["certify", "--families", "Bs", "--r-grid", "0:1:0.05", "--expect"]);
    assert_eq!(code(&o), 0);
    for row in rows(&stdout(&o)).iter().skip(1).filter(|r| r[0] == "Bs") {
        let r: f64 = row[2].parse().unwrap();
        if r < 1.0 {
            assert_eq!(row[5], "NegativeDefinite", "{row:?}");
        }
    }
}

#[test]
fn certify_expectation_failure_exits_one() {
    // a tolerance this loose calls everything semidefinite
    let o = moogvcf(&["certify", "--families", "As", "--r-grid", "0:1:0.1", "--tol", "10", "--expect"]);
    assert_eq!(code(&o), 1);
    let o = moogvcf(&["certify", "--families", "As,Bs,QsWorstCase", "--r-grid", "0:1:0.01", "--expect"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn certify_usage_errors() {
    for grid in ["1:0:0.1", "0:1", "0:x:0.1", "0:2:0.5"] {
        let o = moogvcf(&["certify", "--families", "As", "--r-grid", grid]);
        assert_eq!(code(&o), 2, "{grid}");
        assert_eq!(stderr(&o).lines().count(), 1);
    }
    let o = moogvcf(&["certify", "--families", "Cs", "--r-grid", "0:1:0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_from_rest_stays_at_rest() {
    let o = moogvcf(&["simulate", "--omega0", "1", "--r", "0.7", "--x0", "0,0,0,0", "--dt", "0.1", "--steps", "50"]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    assert_eq!(t[0], ["t", "x1", "x2", "x3", "x4", "V", "Vdot", "dV"]);
    assert_eq!(t.len(), 52);
    for row in &t[1..] {
        for v in &row[1..5] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn simulate_discrete_gradient_contract() {
    let o = moogvcf(&[
        "simulate", "--omega0", "100", "--r", "0.9", "--x0", "1,1,-1,0.5", "--dt", "0.1", "--steps", "1000", "--method",
        "dg",
    ]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    assert_eq!(t.len(), 1002);
    assert_eq!(t[1][7], "");
    let max_dv = t[2..].iter().map(|r| r[7].parse::<f64>().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    assert!(max_dv <= 1e-10, "{max_dv}");
}

#[test]
fn simulate_explicit_fine_steps() {
    let o = moogvcf(&[
        "simulate", "--omega0", "1", "--r", "0.5", "--x0", "-1,2,0.5,-3", "--dt", "0.0001", "--steps", "20000", "--method",
        "rk4",
    ]);
    assert_eq!(code(&o), 0);
    let t = rows(&stdout(&o));
    assert_eq!(t[0].len(), 7);
    let v: Vec<f64> = t[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] - w[0] <= 1e-9));
}

#[test]
fn simulate_failure_exits_three_with_step() {
    let o = moogvcf(&[
        "simulate", "--omega0", "1", "--r", "0.5", "--x0", "1,2,-1,0.5", "--dt", "0.5", "--steps", "5", "--newton-tol",
        "1e-300",
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
}

#[test]
fn simulate_usage_errors() {
    let base = ["simulate", "--omega0", "1", "--r", "0.5", "--dt", "0.1", "--steps", "5"];
    for (flag, value) in [("--x0", "1,2,3"), ("--x0", "a,b,c,d")] {
        let mut args = base.to_vec();
        args.extend([flag, value]);
        assert_eq!(code(&moogvcf(&args)), 2, "{value}");
    }
    let mut args = base.to_vec();
    args.extend(["--x0", "0,0,0,0", "--method", "euler"]);
    assert_eq!(code(&moogvcf(&args)), 2);
    let o = moogvcf(&["simulate", "--omega0", "1", "--r", "0.5", "--x0", "1,0,0,0", "--dt", "0", "--steps", "5"]);
    assert_eq!(code(&o), 2);
    let o = moogvcf(&["simulate", "--omega0", "1", "--r", "0.5", "--x0", "1,0,0,0", "--dt", "0.1", "--steps", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.json");
    let o = moogvcf(&[
        "simulate", "--omega0", "1", "--r", "0.5", "--x0", "1,0,0,0", "--dt", "0.1", "--steps", "10", "--format", "json",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["t"].as_array().unwrap().len(), 11);
    assert_eq!(v["dV"].as_array().unwrap().len(), 10);
}

#[test]
fn emitted_floats_round_trip() {
    let o = moogvcf(&["simulate", "--omega0", "3", "--r", "0.6", "--x0", "0.3,-2,4,1", "--dt", "0.07", "--steps", "40"]);
    for row in rows(&stdout(&o)).iter().skip(1) {
        for field in row.iter().filter(|f| !f.is_empty()) {
            let x: f64 = field.parse().unwrap();
            assert_eq!(ryu::Buffer::new().format(x), field);
        }
    }
}

#[test]
fn golden_outputs_are_stable() {
    let cases: [(&str, &[&str]); 3] = [
        ("eig.csv", &["eig", "--omega0", "2", "--r", "0.5"]),
        ("certify.csv", &["certify", "--families", "As,Bs,QsWorstCase", "--r-grid", "0:1:0.125"]),
        (
            "simulate_dg.csv",
            &["simulate", "--omega0", "10", "--r", "0.8", "--x0", "2,-1,0.5,3", "--dt", "0.05", "--steps", "20", "--method", "dg"],
        ),
    ];
    for (file, args) in cases {
        for threads in ["1", "4"] {
            let o = Command::new(env!("CARGO_BIN_EXE_moogvcf"))
                .args(args)
                .env("RAYON_NUM_THREADS", threads)
                .output()
                .unwrap();
            assert_eq!(code(&o), 0);
            assert_eq!(stdout(&o), golden(file), "{file} with {threads} threads");
        }
    }
}

#[test]
fn sweep_minimal_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "s.json", r#"{"r":[0.5],"omega0":[1],"families":["As"],"seed":1,"samples_per_point":1}"#);
    let o = moogvcf(&["sweep", "--spec", &spec]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["reports"].as_array().unwrap().len(), 1);
    assert_eq!(v["trajectories"].as_array().unwrap().len(), 1);
}

#[test]
fn sweep_bad_specs_exit_two_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"r":[2],"omega0":[1],"families":["As"],"seed":1,"samples_per_point":1}"#, "r[0]"),
        (r#"{"r":[0.5],"omega0":[1],"families":["As"],"seed":1}"#, "samples_per_point"),
        (r#"{"r":[0.5],"omega0":[1],"families":["As"],"seed":1,"samples_per_point":1,"extra":0}"#, "extra"),
        (r#"{"r":[0.5,0.2],"omega0":[1],"families":["As"],"seed":1,"samples_per_point":1}"#, "r[1]"),
        ("not json", ""),
    ];
    for (i, (body, path)) in cases.iter().enumerate() {
        let spec = write_spec(&dir, &format!("bad{i}.json"), body);
        let o = moogvcf(&["sweep", "--spec", &spec]);
        assert_eq!(code(&o), 2, "{body}");
        assert!(stderr(&o).contains(path), "{body}: {}", stderr(&o));
    }
    let o = moogvcf(&["sweep", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_failed_decay_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        &dir,
        "rk4.json",
        r#"{"r":[0.9],"omega0":[1],"families":["Bs"],"seed":3,"samples_per_point":4,"method":"rk4","omega0_dt":10,"steps":50}"#,
    );
    let out = dir.path().join("result.json");
    let o = moogvcf(&["sweep", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["trajectories"].as_array().unwrap().iter().any(|t| t["passed"] == false));
}

#[test]
fn bundled_full_range_spec_passes() {
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/specs/fullrange.json");
    let o = moogvcf(&["sweep", "--spec", spec]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 3 * 50 * 2);
    assert_eq!(v["thresholds"].as_array().unwrap().len(), 3);
}

#[test]
fn gradcheck_exit_codes() {
    let o = moogvcf(&["gradcheck", "--points", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&stdout(&o))[1][2], "0.0");
    let o = moogvcf(&["gradcheck", "--seed", "42", "--points", "500"]);
    assert_eq!(code(&o), 0);
    let err: f64 = rows(&stdout(&o))[1][2].parse().unwrap();
    assert!(err < 1e-5);
    assert_eq!(code(&moogvcf(&["gradcheck", "--points", "zero"])), 2);
}

fn negated_gradient(w: &ScaledState, p: &FilterParams) -> [f64; 4] {
    grad_v(w, p).unwrap().map(|v| -v)
}

#[test]
fn gradcheck_catches_a_broken_gradient() {
    let hooks = Hooks {
        gradient: negated_gradient,
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with_hooks(["moogvcf", "gradcheck", "--seed", "42", "--points", "50"], &mut out, &mut err, &hooks);
    assert_eq!(code, 1);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&moogvcf(&["frobnicate"])), 2);
    assert_eq!(code(&moogvcf(&[])), 2);
}
