use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gpmd::harness::{self, ExperimentKind, RunConfig};
use gpmd::policy::PolicyKind;

#[derive(Parser)]
#[command(name = "gpmd", version, about = "Movement-penalized contextual Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep of policies over seeds, rho values and starts.
    Run(RunArgs),
    /// Aggregate a finished run directory into report.csv.
    Report {
        dir: PathBuf,
    },
    /// One mirror-descent step on a depth-3 binary tree, with the recursion trace.
    MtsDemo {
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Eight comma-separated leaf costs.
        #[arg(long, value_delimiter = ',')]
        costs: Option<Vec<f64>>,
        /// Also write the trace as CSV.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset (synthetic, wind).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    kind: Option<ExperimentKind>,
    #[arg(long, alias = "horizon")]
    steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    rhos: Option<Vec<f64>>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
            }
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::default(),
        };
        if let (Some(_), Some(name)) = (&self.config, &self.preset) {
            anyhow::bail!("--config and --preset {name:?} are mutually exclusive");
        }
        if let Some(k) = self.kind {
            cfg.kind = k;
        }
        if let Some(h) = self.steps {
            cfg.horizon = h;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(p) = &self.policies {
            cfg.policies = p.clone();
        }
        if let Some(r) = &self.rhos {
            cfg.rhos = r.clone();
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        if let Some(o) = &self.output {
            cfg.output_dir = o.clone();
        }
        if let Some(d) = &self.dataset {
            cfg.dataset = Some(d.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    // argument errors are config errors; exit code 2 is reserved for partial failure
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(args) => {
            let cfg = match args.config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e:#}");
                    return ExitCode::from(1);
                }
            };
            if cfg.kind == ExperimentKind::MtsDemo {
                return demo(cfg.kappa, None, None);
            }
            match harness::run(&cfg) {
                Ok(summary) => {
                    let failed = summary.failed();
                    println!(
                        "{} cells written to {} ({} failed)",
                        summary.cells.len(),
                        cfg.output_dir.display(),
                        failed
                    );
                    for c in summary.cells.iter().filter(|c| !c.ok) {
                        eprintln!(
                            "failed: {} seed {} rho {} start {}: {}",
                            c.policy,
                            c.seed,
                            c.rho,
                            c.start,
                            c.error.as_deref().unwrap_or("")
                        );
                    }
                    if failed > 0 {
                        ExitCode::from(2)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Report { dir } => match harness::report(&dir) {
            Ok(rep) => {
                print!("{}", rep.to_csv());
                for m in &rep.missing {
                    eprintln!("missing: {m}");
                }
                if rep.missing.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::MtsDemo { kappa, costs, trace_csv } => demo(kappa, costs, trace_csv),
    }
}

fn demo(kappa: f64, costs: Option<Vec<f64>>, trace_csv: Option<PathBuf>) -> ExitCode {
    let out = match harness::mts_demo(kappa, costs.as_deref()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", out.text);
    if let Some(path) = trace_csv {
        if let Err(e) = std::fs::write(&path, out.trace.to_csv()) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
