use std::path::PathBuf;
use std::process::{Command, Output};

fn momentlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_momentlab"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("momentlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn tangency_of_a_solved_pair() {
    // x₃ = x = (1 − r)γ(t) with t = 1/2, r = 3/2: the curves touch at γ(1/2).
    let c1 = "-0.25,-0.125,-0.0625@1.5";
    let o = momentlab(&["tangency", "--c1", c1, "--c2", "0,0,0@1", "--format", "json"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tangent"], true);
    assert!((v["t"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = momentlab(&["tangency", "--c1", "nonsense", "--c2", "0,0,0@1"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = momentlab(&["acceptance", "--only", "99"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = momentlab(&["run", "--spec", "/nonexistent/spec.cfg"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spec_files_and_environment_layer() {
    let spec = scratch("volume.cfg");
    std::fs::write(&spec, "# tube ladder\ncommand = tube-volume\nsamples = 20000\ndeltas = 2^-3, 2^-4\n").unwrap();
    let o = momentlab(&["run", "--spec", spec.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("delta,value,stderr"));
    assert_eq!(csv.lines().count(), 3);
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("config hash") && err.contains("wall time"));

    // Environment overrides the file; flags override the environment.
    let o = momentlab(&["run", "--spec", spec.to_str().unwrap()], &[("MOMENTLAB_DELTAS", "2^-3,2^-4,2^-5")]);
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = momentlab(
        &["tube-volume", "--deltas", "2^-3", "--samples", "20000"],
        &[("MOMENTLAB_DELTAS", "2^-3,2^-4,2^-5")],
    );
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn outputs_are_seed_deterministic() {
    let run = |seed: &str| {
        let o = momentlab(&["tube-volume", "--deltas", "2^-4", "--samples", "20000", "--seed", seed], &[]);
        stdout(&o)
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn quick_acceptance_subset_writes_a_report() {
    let dir = scratch("report");
    let o = momentlab(&["acceptance", "--budget", "quick", "--only", "6,11", "--out-dir", dir.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("[ 6] at-most-two-intersections: PASS"));
    assert!(table.contains("2/2 criteria pass"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["all_pass"], true);
    assert!(dir.join("c11_decay_high0.csv").exists());
}

#[test]
fn failing_criteria_exit_with_one() {
    let o = momentlab(&["acceptance", "--budget", "quick", "--only", "5", "--convention", "flipped"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fields_round_trip_through_files() {
    let path = scratch("union.bin");
    let o = momentlab(&["example-mass", "--s-prime", "1", "--deltas", "2^-4", "--field-out", path.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = momentlab(&["dimension", "--field", path.to_str().unwrap(), "--scales", "2^-1,2^-2,2^-3,2^-4"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 5);
}
