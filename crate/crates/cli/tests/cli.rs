use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fredholm-disk"));
    c.env_remove("FREDHOLM_DISK_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn classify_euler_at_one_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = run(&["classify", "--op", "euler", "--sigma", "1.0", "--gamma", "1.0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["schema"], "fredholm-disk/1");
    assert_eq!(v["index"], 0);
    assert_eq!(v["kernel_basis"].as_array().unwrap().len(), 3);
    assert_eq!(v["cokernel_basis"].as_array().unwrap().len(), 3);
    for el in v["kernel_basis"].as_array().unwrap() {
        assert!(el["mode"].is_u64() && el["parity"].is_string() && el["radial_form"].is_object());
    }
    assert!(dir.path().join("c.json.meta.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("index 0"));
}

#[test]
fn helmholtz_at_integer_sigma_is_resonant() {
    let o = run(&["classify", "--op", "helmholtz", "--sigma", "2", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "resonant_weight");
    let o = run(&["solve", "--op", "helmholtz", "--sigma", "2", "--gamma", "0", "--rhs", "zero"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manufactured_solve_meets_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let prof = dir.path().join("s.csv");
    let o = run(&[
        "solve",
        "--op",
        "helmholtz",
        "--sigma",
        "0.5",
        "--gamma",
        "0",
        "--rhs",
        "manufactured:gaussian_power:n=1",
        "--out",
        out.to_str().unwrap(),
        "--profiles",
        prof.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert!(v["relative_residual"].as_f64().unwrap() <= 1e-4);
    assert!(v["exact_relative_error"].as_f64().unwrap() <= 1e-4);
    assert_eq!(v["solvability_violated"], false);
    let csv = fs::read_to_string(&prof).unwrap();
    assert!(csv.starts_with("mode,r,re,im\n"));
    assert_eq!(csv.lines().count(), 1 + 1024);
}

#[test]
fn csv_rhs_with_cokernel_component_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    fs::write(&cfg, r#"{"r_min": 1e-3, "r_max": 20, "n_r": 512, "n_theta": 16}"#).unwrap();
    let grid: Vec<f64> = (0..512).map(|i| (1e-3f64.ln() + i as f64 * (20e3f64).ln() / 511.0).exp()).collect();
    let q1 = 2f64.sqrt();
    let mut text = String::from("mode,r,re,im\n");
    for r in &grid {
        text.push_str(&format!("1,{r:?},{:?},0\n", r.powf(q1) * (-r).exp()));
    }
    let rhs = dir.path().join("f.csv");
    fs::write(&rhs, text).unwrap();
    let out = dir.path().join("s.json");
    let o = bin()
        .args(["--config", cfg.to_str().unwrap(), "solve", "--op", "euler", "--sigma", "-0.5", "--gamma", "1"])
        .args(["--rhs", &format!("csv:{}", rhs.display()), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"], "solvability_violated");
    let v = read_json(&out);
    assert_eq!(v["solvability_violated"], true);
    assert!(v["relative_residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["classify", "--op", "euler"]).status.code(), Some(1));
    assert_eq!(
        run(&["solve", "--op", "euler", "--sigma", "0", "--gamma", "0", "--rhs", "bogus"]).status.code(),
        Some(1)
    );
    let o = run(&["solve", "--op", "euler", "--sigma", "-0.5", "--gamma", "-0.5", "--rhs", "manufactured:sinc:n=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "unknown_family");
    assert_eq!(
        run(&["--n-theta", "12", "classify", "--op", "euler", "--sigma", "0", "--gamma", "0"]).status.code(),
        Some(1)
    );
    let o = bin().env("FREDHOLM_DISK_THREADS", "many").args(["bessel", "--order", "0", "--z", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    fs::write(&cfg, r#"{"n_r": 1024, "spacing": 2}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "classify", "--op", "euler", "--sigma", "0", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "parse");
}

#[test]
fn bessel_prints_values() {
    let o = run(&["bessel", "--order", "0", "--z", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let values: Vec<f64> = text.split_whitespace().map(|t| t.split('=').nth(1).unwrap().parse().unwrap()).collect();
    assert!((values[0] - 1.266_065_877_752_008_4).abs() < 1e-14);
    assert!((values[1] - 0.421_024_438_240_708_3).abs() < 1e-14);
    assert_eq!(run(&["bessel", "--order", "1", "--z", "800"]).status.code(), Some(4));
    assert_eq!(run(&["bessel", "--order", "1", "--z", "800", "--scaled"]).status.code(), Some(0));
}

#[test]
fn weyl_writes_ratio_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let sigma = (2f64.sqrt() - 1.0).to_string();
    let o = run(&[
        "weyl",
        "--op",
        "euler",
        "--mode",
        "1",
        "--side",
        "interior",
        "--sigma",
        &sigma,
        "--gamma",
        "0",
        "--jmax",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let ratios: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("j,ratio"));
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] < 0.7 * w[0]), "{ratios:?}");
    let o = run(&["weyl", "--op", "helmholtz", "--mode", "1", "--side", "exterior", "--sigma", "0", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_profiles_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("k");
    let out = dir.path().join("k.json");
    let o = run(&[
        "--n-r",
        "256",
        "kernel",
        "--op",
        "euler",
        "--sigma",
        "1",
        "--gamma",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--profiles-dir",
        prof.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(&prof).unwrap().count(), 6);
    assert!(read_json(&out)["worst_relative_annihilation"].as_f64().unwrap() < 1e-4);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "4", "4"] {
        let out = dir.path().join(format!("v{}.json", reports.len()));
        let o = bin()
            .env("FREDHOLM_DISK_THREADS", threads)
            .args(["verify", "--suite", "classify", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(fs::read(&out).unwrap());
        let solve = dir.path().join(format!("s{}.json", reports.len()));
        bin()
            .env("FREDHOLM_DISK_THREADS", threads)
            .args([
                "solve",
                "--op",
                "shifted",
                "--sigma",
                "0.5",
                "--gamma",
                "0",
                "--rhs",
                "manufactured:bessel_damped:n=2",
            ])
            .args(["--out", solve.to_str().unwrap()])
            .status()
            .unwrap();
        reports.push(fs::read(&solve).unwrap());
    }
    assert_eq!(reports[0], reports[2]);
    assert_eq!(reports[2], reports[4]);
    assert_eq!(reports[1], reports[3]);
    assert_eq!(reports[3], reports[5]);
}

#[test]
fn verify_all_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for p in &paths {
        let o = run(&["verify", "--suite", "all", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema"], "fredholm-disk/1");
    assert_eq!(v["passed"], true);
}
