use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::awe::WindGpParams;
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::gp::BetaSchedule;
use crate::policy::{PolicyKind, UpdateMode};
use crate::sim::CostWeights;
use crate::synth::SynthParams;
use crate::wind::WindGenerator;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Synthetic,
    Wind,
    MtsDemo,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "synthetic" => Ok(Self::Synthetic),
            "wind" => Ok(Self::Wind),
            "mts-demo" => Ok(Self::MtsDemo),
            _ => Err(Error::parameter(format!("kind: unknown experiment {s:?}"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Synthetic => "synthetic",
            Self::Wind => "wind",
            Self::MtsDemo => "mts-demo",
        })
    }
}

/// How service and movement combine into the total cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// `ρ·f + d`.
    #[default]
    Scaled,
    /// `ρ/(1+ρ)·f + 1/(1+ρ)·d`.
    Convex,
}

impl Weighting {
    pub fn weights(self, rho: f64) -> CostWeights {
        match self {
            Weighting::Scaled => CostWeights::scaled(rho),
            Weighting::Convex => CostWeights::convex(rho),
        }
    }
}

/// Starting actions of the episodes of a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Starts {
    /// This many distinct starts drawn from the seed.
    Random(usize),
    /// Every action.
    All,
    Indices(Vec<usize>),
}

impl Default for Starts {
    fn default() -> Self {
        Starts::Random(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegretParams {
    /// Defaults to `(ln n)²`.
    pub alpha: Option<f64>,
    pub beta: f64,
}

impl Default for RegretParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    pub rhos: Vec<f64>,
    /// Steps per episode.
    pub horizon: usize,
    pub episodes: usize,
    pub tau: f64,
    pub kappa: f64,
    pub beta: BetaSchedule,
    pub update_mode: UpdateMode,
    pub weighting: Weighting,
    pub starts: Starts,
    /// Replay one context sequence in every episode of a seed.
    pub replay_contexts: bool,
    pub output_dir: PathBuf,
    /// Wind CSV; the synthetic generator is used when absent.
    pub dataset: Option<PathBuf>,
    pub synth: SynthParams,
    pub wind: WindGenerator,
    pub wind_gp: WindGpParams,
    pub energy: EnergyParams,
    pub regret: RegretParams,
    /// Write one per-step CSV per cell.
    pub write_steps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Synthetic,
            policies: PolicyKind::ALL.to_vec(),
            seeds: vec![0],
            rhos: vec![0.5],
            horizon: 500,
            episodes: 1,
            tau: crate::frt::DEFAULT_TAU,
            kappa: 1.0,
            beta: BetaSchedule::default(),
            update_mode: UpdateMode::PerStep,
            weighting: Weighting::Scaled,
            starts: Starts::default(),
            replay_contexts: false,
            output_dir: PathBuf::from("runs/latest"),
            dataset: None,
            synth: SynthParams::default(),
            wind: WindGenerator::default(),
            wind_gp: WindGpParams::default(),
            energy: EnergyParams::default(),
            regret: RegretParams::default(),
            write_steps: true,
        }
    }
}

impl RunConfig {
    /// Named parameter sets for the standard experiments.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "synthetic" => Ok(Self {
                seeds: (0..25).collect(),
                rhos: vec![0.25, 0.5, 1.0, 2.0, 4.0],
                horizon: 500,
                output_dir: PathBuf::from("runs/synthetic"),
                ..base
            }),
            "wind" => Ok(Self {
                kind: ExperimentKind::Wind,
                seeds: vec![0, 1, 2],
                rhos: vec![1.0, 2.0, 4.0],
                horizon: 960,
                starts: Starts::All,
                output_dir: PathBuf::from("runs/wind"),
                ..base
            }),
            _ => Err(Error::parameter(format!("preset: unknown preset {name:?}"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form. The output directory is left out
    /// so a replay elsewhere hashes the same.
    pub fn hash(&self) -> String {
        let canonical = Self {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::parameter(format!("{field}: {msg}")));
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if self.kind == ExperimentKind::MtsDemo {
            return Ok(());
        }
        if self.policies.is_empty() {
            return bad("policies", "at least one policy is required".into());
        }
        if self.rhos.is_empty() {
            return bad("rhos", "at least one rho is required".into());
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return bad("rhos", format!("rho must be positive, got {r}"));
        }
        if self.horizon == 0 {
            return bad("horizon", "must be at least 1".into());
        }
        if self.episodes == 0 {
            return bad("episodes", "must be at least 1".into());
        }
        if !(self.tau > 1.0) || !self.tau.is_finite() {
            return bad("tau", format!("must exceed 1, got {}", self.tau));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return bad("kappa", format!("must be at least 1, got {}", self.kappa));
        }
        if let BetaSchedule::Constant { value } = self.beta {
            if !(value >= 0.0) || !value.is_finite() {
                return bad("beta", format!("must be non-negative, got {value}"));
            }
        }
        match &self.starts {
            Starts::Random(0) => return bad("starts", "need at least one start".into()),
            Starts::Indices(v) if v.is_empty() => return bad("starts", "need at least one start".into()),
            _ => {}
        }
        if !(self.regret.beta.is_finite()) || self.regret.alpha.is_some_and(|a| !(a >= 0.0)) {
            return bad("regret", "alpha must be non-negative and beta finite".into());
        }
        match self.kind {
            ExperimentKind::Synthetic => {
                if self.synth.side == 0 || self.synth.n_contexts == 0 {
                    return bad("synth", "side and n_contexts must be positive".into());
                }
            }
            ExperimentKind::Wind => {
                self.energy.validate()?;
                if self.dataset.is_none() {
                    self.wind.validate()?;
                }
            }
            ExperimentKind::MtsDemo => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let partial = RunConfig::from_json(r#"{"kind": "wind", "energy": {"v_rated": 10.0}, "starts": "all"}"#).unwrap();
        assert_eq!(partial.kind, ExperimentKind::Wind);
        assert_eq!(partial.energy.v_rated, 10.0);
        assert_eq!(partial.energy.c1, 0.0579);
        assert_eq!(partial.starts, Starts::All);
        let starts = RunConfig::from_json(r#"{"starts": {"random": 3}}"#).unwrap();
        assert_eq!(starts.starts, Starts::Random(3));
    }

    #[test]
    fn validation_names_fields() {
        let e = RunConfig::from_json(r#"{"polices": []}"#).unwrap_err();
        assert!(e.to_string().contains("polices"));
        let cfg = RunConfig {
            rhos: vec![0.5, -1.0],
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("rhos"));
        let cfg = RunConfig {
            seeds: vec![],
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("seeds"));
        assert!(RunConfig::from_json(r#"{"policies": ["gp-md", "ucb"]}"#).is_err());
        assert!(RunConfig::preset("synthetic").unwrap().validate().is_ok());
        assert!(RunConfig::preset("wind").unwrap().validate().is_ok());
    }
}
