//! Small end-to-end runs: determinism, cost accounting, and the offline lower
//! bound.

use gpmd::harness::{load_summary, report, run, RunConfig, Starts};
use gpmd::policy::PolicyKind;
use gpmd::synth::SynthParams;

fn small(dir: &std::path::Path) -> RunConfig {
    RunConfig {
        seeds: vec![3, 4],
        rhos: vec![0.5, 2.0],
        horizon: 25,
        episodes: 2,
        synth: SynthParams {
            side: 5,
            n_contexts: 6,
            ..SynthParams::default()
        },
        starts: Starts::Random(2),
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn reruns_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(&small(a.path())).unwrap();
    let second = run(&small(b.path())).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, load_summary(a.path()).unwrap());
    assert_eq!(first.cells.len(), PolicyKind::ALL.len() * 2 * 2 * 2);
    let name = first.cells[0].steps_file.clone().unwrap();
    assert_eq!(
        std::fs::read(a.path().join(&name)).unwrap(),
        std::fs::read(b.path().join(&name)).unwrap()
    );
}

#[test]
fn costs_add_up_and_respect_the_offline_bound() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&small(dir.path())).unwrap();
    assert_eq!(summary.failed(), 0);
    for c in &summary.cells {
        let tol = 1e-9 * c.total_cost.max(1.0);
        assert!((c.service_total + c.movement_total - c.total_cost).abs() <= tol);
        assert!((c.episode_costs.iter().sum::<f64>() - c.total_cost).abs() <= tol);
        assert!(c.total_cost >= c.offline_optimal - tol, "{c:?}");
        if c.policy == PolicyKind::Stationary {
            assert_eq!(c.movement_total, 0.0);
        }
        let steps = std::fs::read_to_string(dir.path().join(c.steps_file.as_ref().unwrap())).unwrap();
        let last = steps.lines().last().unwrap();
        let cum: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
        assert!((cum - c.total_cost).abs() <= tol);
        assert_eq!(steps.lines().count(), 1 + 25 * 2);
    }
    let rep = report(dir.path()).unwrap();
    assert!(rep.missing.is_empty());
}

#[test]
fn wind_run_reports_energy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset("wind").unwrap();
    cfg.seeds = vec![1];
    cfg.rhos = vec![1.0];
    cfg.horizon = 48;
    cfg.wind.hours = 48;
    cfg.starts = Starts::Indices(vec![0, 12]);
    cfg.output_dir = dir.path().to_path_buf();
    let summary = run(&cfg).unwrap();
    assert_eq!(summary.failed(), 0);
    for c in &summary.cells {
        assert!(c.energy.unwrap().is_finite());
    }
    // the stationary kite pays no movement energy
    let stay = summary.cells.iter().find(|c| c.policy == PolicyKind::Stationary).unwrap();
    assert_eq!(stay.movement_total, 0.0);
}
