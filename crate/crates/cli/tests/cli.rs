use std::process::{Command, Output};

use serde_json::Value;

fn virfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_virfuse")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn assert_round_trip(o: &Output) {
    let text = stdout(o);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), text);
}

#[test]
fn singular_second_level() {
    let o = virfuse(&["singular", "--r", "2", "--s", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_round_trip(&o);
    let v = json(&o);
    assert_eq!(v["level"], 2);
    assert_eq!(v["tau"], "symbolic");
    assert_eq!(v["latex"], "L_{-1}^{2} - \\tau L_{-2}");
}

#[test]
fn singular_latex_and_specialized() {
    let o = virfuse(&["singular", "--r", "1", "--s", "1", "--format", "latex"]);
    assert_eq!(stdout(&o), "L_{-1}\n");
    let o = virfuse(&["singular", "--r", "3", "--s", "1", "--tau", "1/3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["tau"], "1/3");
    // normal ordered: -4τ L_{-2}L_{-1} + (4τ² - 2τ) L_{-3}
    assert_eq!(v["latex"], "L_{-1}^{3} - \\frac{4}{3} L_{-2} L_{-1} - \\frac{2}{9} L_{-3}");
}

#[test]
fn bad_flags_exit_with_one() {
    assert_eq!(virfuse(&["singular", "--r", "0", "--s", "1"]).status.code(), Some(1));
    assert_eq!(virfuse(&["singular", "--r", "1"]).status.code(), Some(1));
    assert_eq!(virfuse(&["singular", "--r", "1", "--s", "1", "--bogus"]).status.code(), Some(1));
    assert_eq!(virfuse(&["fuse", "--r", "1", "--s", "1", "--sign", "up"]).status.code(), Some(1));
    assert_eq!(virfuse(&["ode", "--n", "1", "--kappa", "x"]).status.code(), Some(1));
    assert_eq!(virfuse(&["solve", "--n", "1", "--kappa", "5"]).status.code(), Some(1));
    assert_eq!(virfuse(&["nonsense"]).status.code(), Some(1));
    assert_eq!(virfuse(&["--help"]).status.code(), Some(0));
}

#[test]
fn ill_conditioned_fit_exits_with_two() {
    // one angle cannot pin the three interior kernel directions of D_4
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let o = virfuse(&["mc", "--n", "3", "--kappa", "2", "--theta", "1.5707963", "--samples", "200", "--seed", "1"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let o = virfuse(&["solve", "--n", "3", "--kappa", "2", "--grid", "9", "--mc-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ill-conditioned"));
}

#[test]
fn fuse_worked_cases() {
    let o = virfuse(&["fuse", "--r", "2", "--s", "1", "--sign", "plus"]);
    assert_eq!(o.status.code(), Some(0));
    assert_round_trip(&o);
    let v = json(&o);
    assert_eq!(v["kStar"], 3);
    assert_eq!(v["certificate"], true);
    assert!(!v["constant"].is_null());
    assert_eq!(json(&virfuse(&["fuse", "--r", "1", "--s", "2", "--sign", "plus"]))["kStar"], 4);
    assert_eq!(json(&virfuse(&["fuse", "--r", "1", "--s", "1", "--sign", "plus"]))["kStar"], 2);
}

#[test]
fn ode_commands() {
    let o = virfuse(&["ode", "--n", "1", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fuchsian: true"));
    assert_round_trip(&o);
    let v = json(&virfuse(&["ode", "--n", "3"]));
    let coeffs = v["coeffs"].as_array().unwrap();
    assert_eq!(coeffs.len(), 5);
    assert_eq!(coeffs[0], json(&virfuse(&["ode", "--n", "1"]))["coeffs"][0]);
    let v = json(&virfuse(&["ode", "--n", "2", "--kappa", "8/3"]));
    assert_eq!(v["kappa"], "8/3");
    assert!(!v["coeffs"].to_string().contains("kappa"), "{}", v["coeffs"]);
}

#[test]
fn solve_one_strand() {
    let o = virfuse(&["solve", "--n", "1", "--kappa", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,f0,f1"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 63);
    let mid = &rows[31];
    assert!((mid[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    assert!((mid[2] - 0.5).abs() < 1e-6);
}

#[test]
fn solve_writes_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.svg");
    let o = virfuse(&["solve", "--n", "1", "--kappa", "8/3", "--grid", "15", "--plot", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn solve_fits_monte_carlo_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let o = virfuse(&[
        "mc", "--n", "2", "--kappa", "2", "--theta", "0.7,1.5707963,2.3", "--samples", "2000", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::write(&path, &o.stdout).unwrap();
    let o = virfuse(&["solve", "--n", "2", "--kappa", "2", "--grid", "21", "--mc-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("theta,f0,f1,f2\n"));
    let notes = String::from_utf8_lossy(&o.stderr);
    assert!(notes.contains("method: kernel-fit") && notes.contains("max residual"), "{notes}");
}

#[test]
fn mc_is_deterministic_and_normalized() {
    let args = ["mc", "--n", "2", "--kappa", "2", "--theta", "0.7853981", "--samples", "3000", "--seed", "7"];
    let a = virfuse(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_round_trip(&a);
    let b = Command::new(env!("CARGO_BIN_EXE_virfuse")).args(args).env("VIRFUSE_THREADS", "2").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let counts: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 3000);
    assert_eq!(v["samplesUsed"], 3000);
    assert_eq!(v["config"]["rngSeed"], 7);
}

#[test]
fn mc_midpoint_and_batch() {
    let o = virfuse(&["mc", "--n", "1", "--kappa", "2", "--theta", "1.5707963", "--samples", "4000", "--seed", "7"]);
    let v = json(&o);
    let (f, se) = (v["fHat"][1].as_f64().unwrap(), v["stdErr"][1].as_f64().unwrap());
    assert!((f - 0.5).abs() <= 3.0 * se + 0.01, "{f} ± {se}");
    let o = virfuse(&[
        "mc", "--n", "1", "--kappa", "8/3", "--theta", "1,2", "--samples", "200", "--seed", "1", "--format", "csv",
    ]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("theta,f0,f1,stderr0,stderr1,samples,undecided\n1,"));
}

#[test]
fn mc_rejects_bad_settings() {
    let base = ["mc", "--n", "1", "--theta", "1", "--samples", "10", "--seed", "1"];
    let with = |extra: &[&str]| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend_from_slice(extra);
        virfuse(&a).status.code()
    };
    assert_eq!(with(&["--kappa", "6"]), Some(1));
    assert_eq!(with(&["--kappa", "2", "--dt", "0"]), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_virfuse"))
        .args(base)
        .args(["--kappa", "2"])
        .env("VIRFUSE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bpz_multi_commands() {
    let o = virfuse(&["bpz-multi", "--r", "1", "--s", "1", "--n", "0", "--check-z0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_round_trip(&o);
    assert_eq!(json(&o)["z0Check"], "PASS");

    let v = json(&virfuse(&["bpz-multi", "--r", "1", "--s", "0", "--n", "0"]));
    let ops = v["operators"].as_array().unwrap();
    assert_eq!(ops.len(), 1);
    assert_eq!(ops[0]["operator"], "(1) d_x1^2");
    assert!(v.get("z0Check").is_none());

    let o = virfuse(&["bpz-multi", "--r", "2", "--s", "1", "--n", "1", "--check-z0"]);
    assert_eq!(json(&o)["z0Check"], "PASS");
    let o = virfuse(&["bpz-multi", "--r", "1", "--s", "1", "--n", "2", "--a", "1/3,-2/5", "--check-z0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["z0Check"], "PASS");

    assert_eq!(virfuse(&["bpz-multi", "--r", "0", "--s", "0", "--n", "1"]).status.code(), Some(1));
    assert_eq!(virfuse(&["bpz-multi", "--r", "1", "--s", "0", "--n", "2", "--a", "1"]).status.code(), Some(1));
}

#[test]
fn quick_verification_passes() {
    let o = virfuse(&["verify", "--level", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 7);
    let summary: Value = serde_json::from_str(&text[text.find('{').unwrap()..]).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["failed"], serde_json::json!([]));
}
