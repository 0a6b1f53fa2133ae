use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, RunConfig, Starts};
use crate::awe::{wind_gp_config, wind_task};
use crate::bench::{offline_optimal, regret_from_costs, RegretReport};
use crate::error::{Error, Result};
use crate::frt::frt_embed;
use crate::gp::GpConfig;
use crate::hst::HstTree;
use crate::policy::{build_policy, Link, PolicyKind, PolicySetup};
use crate::rng::{self, Stream};
use crate::sim::{generated_energy, run_episode, CostWeights, EpisodePlan};
use crate::synth::synth_instance;
use crate::task::Task;
use crate::wind::{ingest_wind_csv, WindTable};

pub const STEP_HEADER: &str = "step,episode,context,action,service,movement,cum_total";

/// Everything shared by the cells of one seed.
pub struct SeedSetup {
    pub seed: u64,
    pub task: Arc<Task>,
    pub tree: Option<Arc<HstTree>>,
    pub gp: GpConfig,
    pub link: Link,
    pub plans: Vec<EpisodePlan>,
    pub starts: Vec<usize>,
}

impl SeedSetup {
    pub fn new(config: &RunConfig, seed: u64, dataset: Option<&WindTable>) -> Result<Self> {
        let (task, gp, link) = match config.kind {
            ExperimentKind::Synthetic => {
                let inst = synth_instance(seed, &config.synth)?;
                (inst.to_task(), inst.learner_config(), Link::Identity)
            }
            ExperimentKind::Wind => {
                let generated;
                let table = match dataset {
                    Some(t) => t,
                    None => {
                        generated = config.wind.generate(seed)?;
                        &generated
                    }
                };
                let task = wind_task(table, &config.energy)?;
                let gp = wind_gp_config(table, &config.wind_gp)?;
                (task, gp, Link::Energy(config.energy))
            }
            ExperimentKind::MtsDemo => {
                return Err(Error::parameter("kind: mts-demo has no simulation cells"));
            }
        };
        task.validate()?;
        let n = task.n_actions();
        let plans = (0..config.episodes)
            .map(|m| {
                let mut noise = rng::substream(seed, Stream::Noise, m as u64);
                match config.kind {
                    ExperimentKind::Wind => {
                        let t = task.n_contexts();
                        let contexts = (0..config.horizon).map(|h| (m * config.horizon + h) % t).collect();
                        EpisodePlan::replay(contexts, &mut noise)
                    }
                    _ => {
                        let idx = if config.replay_contexts { 0 } else { m as u64 };
                        let mut ctx = rng::substream(seed, Stream::Context, idx);
                        EpisodePlan::uniform(task.n_contexts(), config.horizon, &mut ctx, &mut noise)
                    }
                }
            })
            .collect();
        let starts = match &config.starts {
            Starts::All => (0..n).collect(),
            Starts::Indices(v) => {
                if let Some(&x) = v.iter().find(|&&x| x >= n) {
                    return Err(Error::parameter(format!("starts: index {x} out of range for {n} actions")));
                }
                v.clone()
            }
            Starts::Random(k) => {
                let all: Vec<usize> = (0..n).collect();
                let mut r = rng::stream(seed, Stream::Start);
                all.choose_multiple(&mut r, (*k).min(n)).copied().collect()
            }
        };
        let tree = if config.policies.iter().any(|p| p.uses_tree()) {
            Some(Arc::new(frt_embed(&task.metric, config.tau, seed)?))
        } else {
            None
        };
        Ok(Self {
            seed,
            task: Arc::new(task),
            tree,
            gp,
            link,
            plans,
            starts,
        })
    }

    /// Per-episode offline-optimal costs from `x0` under `weights`.
    pub fn offline_costs(&self, weights: CostWeights, x0: usize) -> Result<Vec<f64>> {
        let table = weights.service_table(&self.task);
        let metric = if weights.movement == 1.0 {
            self.task.metric.clone()
        } else {
            self.task.metric.scaled(weights.movement)?
        };
        self.plans
            .iter()
            .map(|p| offline_optimal(&metric, &table, &p.contexts, x0).map(|r| r.1))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub policy: PolicyKind,
    pub seed: u64,
    pub rho: f64,
    pub start: usize,
    pub ok: bool,
    pub error: Option<String>,
    pub total_cost: f64,
    pub service_total: f64,
    pub movement_total: f64,
    pub energy: Option<f64>,
    pub offline_optimal: f64,
    pub episode_costs: Vec<f64>,
    pub regret: Option<RegretReport>,
    pub steps_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub cells: Vec<CellSummary>,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| !c.ok).count()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config_hash: String,
    seeds: &'a [u64],
    config: &'a RunConfig,
    cells: usize,
    failed: usize,
}

pub fn cell_file_name(policy: PolicyKind, seed: u64, rho: f64, start: usize) -> String {
    format!("steps_{policy}_seed{seed}_rho{rho}_start{start}.csv")
}

/// Runs one (policy, seed, ρ, start) cell; per-step rows go to `steps`.
pub fn run_cell(
    config: &RunConfig,
    setup: &SeedSetup,
    policy_kind: PolicyKind,
    rho: f64,
    start: usize,
    optimal: &[f64],
    steps: Option<&mut dyn Write>,
) -> Result<CellSummary> {
    let weights = config.weighting.weights(rho);
    let policy_setup = PolicySetup {
        rho: weights.rho(),
        kappa: config.kappa,
        update_mode: config.update_mode,
        gp: setup.gp.clone(),
        beta: config.beta,
        link: setup.link,
    };
    let mut policy = build_policy(policy_kind, setup.task.clone(), setup.tree.clone(), &policy_setup)?;
    let mut coupling_rng = rng::substream(setup.seed, Stream::Coupling, start as u64);
    let mut out = steps;
    if let Some(w) = out.as_deref_mut() {
        writeln!(w, "{STEP_HEADER}")?;
    }
    let mut cum = 0.0;
    let mut service_total = 0.0;
    let mut movement_total = 0.0;
    let mut energy = setup.task.energy_offset.as_ref().map(|_| 0.0);
    let mut episode_costs = Vec::with_capacity(setup.plans.len());
    let mut io_error = None;
    for (m, plan) in setup.plans.iter().enumerate() {
        let log = run_episode(
            policy.as_mut(),
            &setup.task,
            plan,
            start,
            weights,
            &mut coupling_rng,
            |h, o| {
                cum += o.service_true + o.movement_true;
                service_total += o.service_true;
                movement_total += o.movement_true;
                if let Some(w) = out.as_deref_mut() {
                    if let Err(e) = writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        h + 1,
                        m + 1,
                        plan.contexts[h],
                        o.action,
                        o.service_true,
                        o.movement_true,
                        cum
                    ) {
                        io_error.get_or_insert(e);
                    }
                }
            },
        )?;
        if let Some(e) = io_error.take() {
            return Err(e.into());
        }
        if let (Some(acc), Some(e)) = (energy.as_mut(), generated_energy(&setup.task, &log, weights)) {
            *acc += e;
        }
        episode_costs.push(log.cost());
    }
    let n = setup.task.n_actions() as f64;
    let alpha = config.regret.alpha.unwrap_or_else(|| n.ln().powi(2));
    Ok(CellSummary {
        policy: policy_kind,
        seed: setup.seed,
        rho,
        start,
        ok: true,
        error: None,
        total_cost: cum,
        service_total,
        movement_total,
        energy,
        offline_optimal: optimal.iter().sum(),
        regret: Some(regret_from_costs(&episode_costs, optimal, alpha, config.regret.beta)),
        episode_costs,
        steps_file: None,
    })
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(super::WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::parameter(format!("{}: expected a worker count, got {v:?}", super::WORKERS_ENV)))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::parameter(format!("cannot start workers: {e}")))
}

/// Runs every cell of `config`, writing per-step CSVs, `summary.json` and
/// `manifest.json` into the output directory. Failed cells are recorded and
/// the run continues.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    if config.kind == ExperimentKind::MtsDemo {
        return Err(Error::parameter("kind: use the mts-demo command for the walkthrough"));
    }
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let dataset = match (&config.kind, &config.dataset) {
        (ExperimentKind::Wind, Some(p)) => Some(ingest_wind_csv(p)?),
        _ => None,
    };
    let pool = worker_pool()?;
    let setups: Vec<SeedSetup> = pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&s| SeedSetup::new(config, s, dataset.as_ref()))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut jobs = Vec::new();
    for (si, setup) in setups.iter().enumerate() {
        for &rho in &config.rhos {
            for &start in &setup.starts {
                jobs.push((si, rho, start));
            }
        }
    }
    let optima: Vec<Result<Vec<f64>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, rho, start)| setups[si].offline_costs(config.weighting.weights(rho), start))
            .collect()
    });

    let mut cells = Vec::new();
    for (j, &(si, rho, start)) in jobs.iter().enumerate() {
        for &p in &config.policies {
            cells.push((j, si, rho, start, p));
        }
    }
    let summaries: Vec<CellSummary> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(j, si, rho, start, p)| {
                let setup = &setups[si];
                let file = cell_file_name(p, setup.seed, rho, start);
                let result = optima[j].as_ref().map_err(|e| Error::input(e.to_string())).and_then(|opt| {
                    if config.write_steps {
                        let f = fs::File::create(dir.join(&file))?;
                        let mut w = BufWriter::new(f);
                        let mut s = run_cell(config, setup, p, rho, start, opt, Some(&mut w))?;
                        w.flush()?;
                        s.steps_file = Some(file.clone());
                        Ok(s)
                    } else {
                        run_cell(config, setup, p, rho, start, opt, None)
                    }
                });
                result.unwrap_or_else(|e| CellSummary {
                    policy: p,
                    seed: setup.seed,
                    rho,
                    start,
                    ok: false,
                    error: Some(e.to_string()),
                    total_cost: f64::NAN,
                    service_total: f64::NAN,
                    movement_total: f64::NAN,
                    energy: None,
                    offline_optimal: f64::NAN,
                    episode_costs: Vec::new(),
                    regret: None,
                    steps_file: None,
                })
            })
            .collect()
    });

    let summary = RunSummary {
        config_hash: config.hash(),
        kind: config.kind,
        cells: summaries,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: summary.config_hash.clone(),
        seeds: &config.seeds,
        config,
        cells: summary.cells.len(),
        failed: summary.failed(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

pub fn load_summary(dir: impl AsRef<Path>) -> Result<RunSummary> {
    let path: PathBuf = dir.as_ref().join("summary.json");
    let text = fs::read_to_string(&path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthParams;

    fn tiny(dir: &Path) -> RunConfig {
        RunConfig {
            seeds: vec![1],
            horizon: 8,
            synth: SynthParams {
                side: 3,
                n_contexts: 4,
                ..SynthParams::default()
            },
            output_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn stationary_has_no_movement() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            policies: vec![PolicyKind::Stationary],
            ..tiny(dir.path())
        };
        let s = run(&cfg).unwrap();
        let c = &s.cells[0];
        assert!(c.ok);
        assert_eq!(c.movement_total, 0.0);
        let setup = SeedSetup::new(&cfg, 1, None).unwrap();
        let expected: f64 = setup.plans[0]
            .contexts
            .iter()
            .map(|&e| 0.5 * setup.task.service[e][c.start])
            .fold(0.0, |a, b| a + b);
        assert_eq!(c.total_cost, expected);
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn cell_errors_surface() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            policies: vec![PolicyKind::Stationary, PolicyKind::CgpLcb],
            ..tiny(dir.path())
        };
        let mut setup = SeedSetup::new(&cfg, 1, None).unwrap();
        setup.gp.lam = -1.0;
        let r = run_cell(&cfg, &setup, PolicyKind::CgpLcb, 0.5, 0, &[0.0], None);
        assert!(r.is_err());
        let s = run(&cfg).unwrap();
        assert_eq!(s.failed(), 0);
        assert_eq!(s.cells.len(), 2);
    }
}
