use std::path::Path;
use std::process::Command;

fn gpmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpmd"))
}

fn run_stationary(out: &Path) -> std::process::Output {
    gpmd()
        .args(["run", "--kind", "synthetic", "--steps", "10", "--seeds", "1", "--policies", "stationary", "--output"])
        .arg(out)
        .env("GPMD_WORKERS", "2")
        .output()
        .unwrap()
}

fn step_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn stationary_run_is_deterministic_and_has_no_movement() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_stationary(a.path()).status.success());
    assert!(run_stationary(b.path()).status.success());
    let fa = step_files(a.path());
    assert_eq!(fa.len(), 1);
    let text = std::fs::read(&fa[0]).unwrap();
    assert_eq!(text, std::fs::read(b.path().join(fa[0].file_name().unwrap())).unwrap());
    assert_eq!(
        std::fs::read(a.path().join("summary.json")).unwrap(),
        std::fs::read(b.path().join("summary.json")).unwrap()
    );

    let text = String::from_utf8(text).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,episode,context,action,service,movement,cum_total"));
    let mut sum = 0.0;
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[5].parse::<f64>().unwrap(), 0.0);
        sum += f[4].parse::<f64>().unwrap();
        assert_eq!(f[6].parse::<f64>().unwrap(), sum);
        rows += 1;
    }
    assert_eq!(rows, 10);

    let report = gpmd().arg("report").arg(a.path()).output().unwrap();
    assert!(report.status.success());
    let csv = String::from_utf8(report.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("stationary,0.5,1,"));
    assert!(a.path().join("report.csv").exists());
}

#[test]
fn config_errors_exit_one() {
    let out = gpmd().args(["run", "--rhos", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rhos"));
    let out = gpmd().args(["run", "--policies", "ucb"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = gpmd().args(["run", "--steps", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seeds": [3, 4], "horizon": 50, "policies": ["gp-md"], "write_steps": false}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = gpmd()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--steps", "5", "--seeds", "2", "--policies", "stationary", "--output"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"horizon\": 5,"));
    assert!(manifest.contains("\"seeds\": [\n    2\n  ]"));
    assert!(manifest.contains("\"policies\": [\n      \"stationary\"\n    ]"));
}

#[test]
fn mts_demo_prints_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = gpmd().args(["mts-demo", "--trace-csv"]).arg(&trace).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for u in 1..=7 {
        assert!(text.contains(&format!("u{u} ")));
    }
    let csv = std::fs::read_to_string(trace).unwrap();
    assert!(csv.starts_with("order,vertex,child"));
}
