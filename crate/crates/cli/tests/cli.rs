use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_greedyjump"));
    c.env_remove("GREEDYJUMP_SEED");
    c
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file, with the provenance lines dropped.
fn data(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn invariant_mean_in_three_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["invariant", "--d", "3", "--steps", "1e6", "--burnin", "1e4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("invariant.json"));
    let mean = s["mean"].as_f64().unwrap();
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
    assert_eq!(s["samples"].as_u64(), Some(1_000_000));
    let csv = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# mean: ")));
    assert!(csv.contains("bin_left,bin_right,count"));
}

#[test]
fn unit_ball_start_is_periodic_in_base_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["vdc-periodic", "--b", "2", "--start", "0.3,0.4", "--cycles", "100"]);
    assert!(o.status.success());
    let r = json(&dir.path().join("periodic.json"));
    assert_eq!(r["is_periodic"], Value::Bool(true));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout, r);
}

#[test]
fn reruns_give_identical_data() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--source", "sphere:d=3", "--start", "2,-1,0.5", "--n", "500", "--seed", "11"];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    let fa = fs::read(a.path().join("trajectory.csv")).unwrap();
    let fb = fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(fa, fb);
    let other = tempfile::tempdir().unwrap();
    let mut args2 = args;
    args2[8] = "12";
    assert!(run(other.path(), &args2).status.success());
    assert_ne!(data(&a.path().join("trajectory.csv")), data(&other.path().join("trajectory.csv")));
}

#[test]
fn seed_flag_overrides_environment() {
    let args = ["simulate", "--source", "sphere:d=2", "--start", "1,1", "--n", "50"];
    let env = tempfile::tempdir().unwrap();
    let o = bin().env("GREEDYJUMP_SEED", "5").arg("--out").arg(env.path()).args(args).output().unwrap();
    assert!(o.status.success());
    assert_eq!(json(&env.path().join("manifest.json"))["seed"].as_u64(), Some(5));

    let both = tempfile::tempdir().unwrap();
    let o = bin()
        .env("GREEDYJUMP_SEED", "5")
        .arg("--out")
        .arg(both.path())
        .args(args)
        .args(["--seed", "9"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(json(&both.path().join("manifest.json"))["seed"].as_u64(), Some(9));

    let flag = tempfile::tempdir().unwrap();
    assert!(run(flag.path(), &[&args[..], &["--seed", "5"]].concat()).status.success());
    assert_eq!(
        data(&env.path().join("trajectory.csv")),
        data(&flag.path().join("trajectory.csv"))
    );
    assert_ne!(
        data(&env.path().join("trajectory.csv")),
        data(&both.path().join("trajectory.csv"))
    );
}

#[test]
fn csv_provenance_replays() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--source", "vdc:b=3", "--start", "-sqrt2,0.25", "--n", "40"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = text.lines().take(4).collect();
    assert!(lines[0].starts_with("# greedyjump "));
    assert_eq!(lines[2], "# seed: 20240601");
    assert_eq!(lines[3], "step,x1,x2,norm,sign");
    let config = lines[1].strip_prefix("# config: ").unwrap();
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"].as_str(), Some(config));
    assert_eq!(manifest["status"].as_str(), Some("ok"));

    let again = tempfile::tempdir().unwrap();
    let o = bin().arg("--out").arg(again.path()).args(config.split(' ')).output().unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(dir.path().join("trajectory.csv")).unwrap(),
        fs::read(again.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn large_runs_default_to_norms_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["simulate", "--source", "polyphase:c=sqrt2:p=3", "--start", "0.5,0", "--n", "2e6", "--reservoir", "50"],
    );
    assert!(o.status.success());
    assert!(!dir.path().join("trajectory.csv").exists());
    let norms = data(&dir.path().join("norms.csv"));
    assert!(norms.starts_with("step,norm,sign\n0,0.5,\n"));
    assert_eq!(norms.lines().count(), 2_000_002);
    assert_eq!(data(&dir.path().join("reservoir.csv")).lines().count(), 51);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--source", "vdc:b=5", "--start", "0,0", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let s = json(&dir.path().join("trajectory.json"));
    assert_eq!(s["halted"], Value::Bool(true));
    assert_eq!(json(&dir.path().join("manifest.json"))["status"].as_str(), Some("indeterminate"));

    let o = run(dir.path(), &["simulate", "--source", "vdc:b=5", "--start", "0,0", "--n", "3", "--tie", "choose-plus"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(dir.path(), &["simulate", "--source", "nonsense", "--start", "0,0", "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonsense"));
    assert_eq!(json(&dir.path().join("manifest.json"))["status"].as_str(), Some("failed"));

    let o = run(dir.path(), &["hitting", "--start", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(dir.path(), &["validate", "--only", "no-such-criterion"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn hitting_and_stop_cycle() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["hitting", "--start", "50,17"]).status.success());
    let h = json(&dir.path().join("hitting.json"));
    assert_eq!(h["result"]["outcome"].as_str(), Some("hit"));
    assert!(h["result"]["steps"].as_f64().unwrap() <= h["bound"].as_f64().unwrap());

    assert!(run(dir.path(), &["stopcycle", "--b", "8", "--eps", "0.2"]).status.success());
    let s = json(&dir.path().join("stopcycle.json"));
    assert_eq!(s["prediction"]["k"].as_u64(), Some(7));
    assert_eq!(s["simulated_k"].as_u64(), Some(7));
    assert!(dir.path().join("orbit.csv").exists());
}

#[test]
fn region_raster_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["vdc-region", "--b", "5", "--resolution", "60"]);
    assert!(o.status.success());
    let rows = data(&dir.path().join("region.csv"));
    assert!(rows.starts_with("x,y,periodic_flag,return_error\n"));
    assert_eq!(rows.lines().count(), 3601);
    let r = json(&dir.path().join("region.json"));
    assert_eq!(r["triangles"].as_array().map(Vec::len), Some(2));
    assert!(r["periodic_cells"].as_u64().unwrap() > 0);
}

#[test]
fn solver_and_kernel() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["solve", "--d", "3", "--nodes", "800"]).status.success());
    let s = json(&dir.path().join("solve.json"));
    assert!((s["mean"].as_f64().unwrap() - 1.0).abs() < 5e-3);
    assert!(s["identity"]["max_residual"].as_f64().unwrap() < 1e-3);
    assert!(data(&dir.path().join("density.csv")).starts_with("node,value,weight\n"));

    assert!(run(dir.path(), &["kernel", "--d", "2", "--x", "1.5"]).status.success());
    let k = json(&dir.path().join("kernel.json"));
    assert!((k["integral"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn validate_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["validate", "--quick", "--only", "stall-construction"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().next().unwrap().starts_with("PASS stall-construction"));
    let v = json(&dir.path().join("validate.json"));
    assert_eq!(v["results"].as_array().map(Vec::len), Some(1));
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn harmonic_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["harmonic", "--target", "pi", "--n", "1e4"]).status.success());
    let h = json(&dir.path().join("harmonic.json"));
    assert_eq!(h["first_crossing"].as_u64(), Some(13));
    assert_eq!(data(&dir.path().join("harmonic.csv")).lines().count(), 10_001);
}

#[test]
fn cubic_phase_from_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--source", "polyphase:c=sqrt2:p=3", "--start", "0,0", "--n", "1e6", "--norms-only"];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("trajectory.json"))["indeterminate_at"].as_u64(), Some(0));

    let o = run(dir.path(), &[&args[..], &["--tie", "choose-plus"]].concat());
    assert!(o.status.success());
    let s = json(&dir.path().join("trajectory.json"));
    assert_eq!(s["steps"].as_u64(), Some(1_000_000));
    assert_eq!(s["tie_overrides"].as_u64(), Some(1));
    let mean = s["mean_norm"].as_f64().unwrap();
    assert!((mean - std::f64::consts::FRAC_PI_4).abs() < 0.02, "{mean}");
}
