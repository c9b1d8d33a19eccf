use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpoint-knots")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn help_lists_every_command() {
    let out = run(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["simulate", "tpoint", "classify", "template", "model", "braid", "--paper-suite"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn simulate_stays_bounded_at_classical_parameters() {
    let out = run(&["simulate", "--t", "50"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(rows.len(), 5001);
    assert!(rows.iter().all(|r| r[1..].iter().all(|v| v.abs() < 100.0)));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().next(), Some("t,x,y,z"));
}

#[test]
fn simulate_from_the_origin_is_constant() {
    let out = run(&["simulate", "--state", "0", "0", "0", "--t", "5"]);
    let rows = csv_rows(&String::from_utf8_lossy(&out.stdout));
    assert!(rows.iter().all(|r| r[1..] == [0.0, 0.0, 0.0]));
}

#[test]
fn simulate_mirrored_states_give_mirrored_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let svg = dir.path().join("a.svg");
    let ra = run(&[
        "simulate",
        "--state",
        "1",
        "2",
        "3",
        "--t",
        "20",
        "--out",
        a.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    let rb = run(&["simulate", "--state", "-1", "-2", "3", "--t", "20", "--out", b.to_str().unwrap()]);
    assert_eq!((code(&ra), code(&rb)), (0, 0));
    let ra = csv_rows(&std::fs::read_to_string(a).unwrap());
    let rb = csv_rows(&std::fs::read_to_string(b).unwrap());
    for (p, q) in ra.iter().zip(&rb) {
        assert_eq!(p[0], q[0]);
        assert!((p[1] + q[1]).abs() < 1e-7 && (p[2] + q[2]).abs() < 1e-7 && (p[3] - q[3]).abs() < 1e-7);
    }
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn simulate_rejects_bad_parameters() {
    assert_eq!(code(&run(&["simulate", "--sigma", "-1"])), 2);
}

#[test]
fn tpoint_recovers_the_second_tpoint() {
    let out = run(&["tpoint", "--seed-r", "85", "--seed-sigma", "11.8"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["r"].as_f64().unwrap() - 85.0292).abs() < 0.05);
    assert!((v["sigma"].as_f64().unwrap() - 11.8279).abs() < 0.05);
    assert!(v["gap_norm"].as_f64().unwrap() < 1e-6);
    assert!(v["iterations"].is_u64());
    // floats carry 17 significant digits
    let raw = String::from_utf8_lossy(&out.stdout);
    assert!(raw.contains("\"beta\":2.6666666666666665e0"), "{raw}");
}

#[test]
fn bad_seed_exits_with_diagnostics() {
    let out = run(&["tpoint", "--seed-r", "5", "--seed-sigma", "5"]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["error"], "no-convergence");
    assert_eq!(v["seed"]["r"].as_f64(), Some(5.0));
}

#[test]
fn classify_identifies_both_tpoints() {
    let out = run(&["classify", "--r", "85", "--sigma", "11.8", "--search"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["identification"], "figure-eight");
    assert_eq!(v["alexander"]["text"], "t^2 - 3t + 1");
    assert_eq!(v["stable"], true);
    assert_eq!(v["views"].as_array().unwrap().len(), 10);

    let out = run(&["classify", "--r", "31", "--sigma", "10.2", "--search", "--directions", "3"]);
    assert_eq!(json(&out)["identification"], "trefoil");
}

#[test]
fn classify_away_from_a_tpoint_is_a_precondition_error() {
    let out = run(&["classify", "--r", "28", "--sigma", "10", "--radius", "10"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["error"], "gap-too-large");
}

#[test]
fn classify_writes_curve_and_diagram() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let svg = dir.path().join("knot.svg");
    let out = run(&[
        "classify",
        "--r",
        "31",
        "--sigma",
        "10.2",
        "--search",
        "--directions",
        "1",
        "--curve",
        curve.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(curve).unwrap();
    assert_eq!(text.lines().next(), Some("arc,t,x,y,z"));
    assert_eq!(text.lines().count() - 1, json(&out)["vertices"].as_u64().unwrap() as usize);
    assert!(std::fs::read_to_string(svg).unwrap().contains("<svg"));
}

#[test]
fn template_enumerate_lorenz() {
    let v = json(&run(&["template", "enumerate", "--template", "lorenz", "--max-len", "2"]));
    assert_eq!(v["count"], 3);
    assert_eq!(v["words"], serde_json::json!(["L", "R", "LR"]));
    let csv = run(&["template", "enumerate", "--template", "lorenz", "--max-len", "2", "--format", "csv"]);
    assert_eq!(String::from_utf8_lossy(&csv.stdout), "word,length\nL,1\nR,1\nLR,2\n");
}

#[test]
fn template_verify_figure_eight() {
    let out = run(&["template", "verify", "--template", "fig8", "--max-len", "10"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["knots"], 3902);
    assert_eq!(v["pass"], true);
}

#[test]
fn custom_template_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.json");
    let spec = run(&["template", "spec", "--template", "fig8", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&spec), 0);
    let again = run(&["template", "spec", "--template", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&again.stdout), std::fs::read_to_string(&path).unwrap());
    let a = run(&["template", "report", "--template", "fig8", "--max-len", "6"]);
    let b = run(&["template", "report", "--template", path.to_str().unwrap(), "--max-len", "6"]);
    assert_eq!(a.stdout, b.stdout);
    std::fs::write(&path, "{\"bands\": []}").unwrap();
    assert_eq!(code(&run(&["template", "report", "--template", path.to_str().unwrap()])), 2);
}

#[test]
fn template_report_csv() {
    let out = run(&["template", "report", "--template", "lorenz", "--max-len", "5", "--format", "csv"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("word,n,c,mu,genus,alexander,ident,positive,prime,fibered"));
    assert!(text.lines().any(|l| l.starts_with("LLRLR,") && l.contains("trefoil")));
}

#[test]
fn model_commands() {
    let v = json(&run(&["model", "orbits", "--max-len", "6"]));
    assert_eq!(v["counts_match_traces"], true);
    assert_eq!(v["all_round_trip"], true);
    assert_eq!(v["layout"], "reconstructed");
    let traces: Vec<&str> = v["counts"].as_array().unwrap().iter().map(|c| c["trace"].as_str().unwrap()).collect();
    assert_eq!(traces, ["2", "8", "20", "56", "152", "416"]);
    let first = &v["orbits"][0];
    assert!(first["point"]["x"]["a"].is_string() && first["point"]["x"]["b"].is_string());

    let cone = run(&["model", "cone-check"]);
    assert_eq!(code(&cone), 0);
    assert_eq!(json(&cone)["cone"]["expansion"]["b"], "1");
    assert_eq!(code(&run(&["model", "cone-check", "--model", "sheared"])), 1);

    let c = run(&["model", "correspond", "--max-len", "8"]);
    assert_eq!((code(&c), json(&c)["pass"].clone()), (0, Value::Bool(true)));
    assert_eq!(code(&run(&["model", "correspond", "--model", "lorenz"])), 0);
}

#[test]
fn braid_reports() {
    let v = json(&run(&["braid", "s1 s2 -s1"]));
    assert_eq!(v["n"], 3);
    assert_eq!(v["positive"], false);
    let v = json(&run(&["braid", "s1 -s2 s1 -s2"]));
    assert_eq!(v["identification"], "figure-eight");
    assert_eq!(v["alexander"], v["diagram_alexander"]);
    let v = json(&run(&["braid", "s1 s1", "--strands", "2"]));
    assert_eq!(v["mu"], 2);
    assert!(v.get("alexander").is_none());
    assert_eq!(code(&run(&["braid", "s0"])), 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["template", "report", "--template", "fig8", "--max-len", "7"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_tpoint-knots")).args(args).env("TPOINT_THREADS", "1").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["model", "orbits", "--max-len", "5", "--threads", "2"]);
    let d = run(&["model", "orbits", "--max-len", "5"]);
    assert_eq!(c.stdout, d.stdout);
}
