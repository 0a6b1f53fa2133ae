use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::run::{load_summary, CellSummary};
use crate::error::Result;
use crate::policy::PolicyKind;

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub policy: PolicyKind,
    pub rho: f64,
    pub cells: usize,
    pub total: Stat,
    pub movement: Stat,
    pub service: Stat,
    pub energy: Option<Stat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Descriptions of failed cells, excluded from the aggregates.
    pub missing: Vec<String>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "policy,rho,cells,total_mean,total_std,movement_mean,movement_std,service_mean,service_std,energy_mean,energy_std\n",
        );
        for r in &self.rows {
            let (em, es) = r
                .energy
                .map_or((String::new(), String::new()), |e| (e.mean.to_string(), e.std.to_string()));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.policy,
                r.rho,
                r.cells,
                r.total.mean,
                r.total.std,
                r.movement.mean,
                r.movement.std,
                r.service.mean,
                r.service.std,
                em,
                es
            );
        }
        out
    }
}

/// Aggregates cells per (policy, ρ).
pub fn aggregate(cells: &[CellSummary]) -> Report {
    let mut groups: BTreeMap<(PolicyKind, u64), Vec<&CellSummary>> = BTreeMap::new();
    let mut missing = Vec::new();
    for c in cells {
        if c.ok {
            groups.entry((c.policy, c.rho.to_bits())).or_default().push(c);
        } else {
            missing.push(format!(
                "{} seed {} rho {} start {}: {}",
                c.policy,
                c.seed,
                c.rho,
                c.start,
                c.error.as_deref().unwrap_or("failed")
            ));
        }
    }
    let mut rows: Vec<ReportRow> = groups
        .into_iter()
        .map(|((policy, rho), cs)| {
            let pick = |f: fn(&CellSummary) -> f64| -> Vec<f64> { cs.iter().map(|c| f(c)).collect() };
            let energy: Vec<f64> = cs.iter().filter_map(|c| c.energy).collect();
            ReportRow {
                policy,
                rho: f64::from_bits(rho),
                cells: cs.len(),
                total: Stat::of(&pick(|c| c.total_cost)).expect("non-empty group"),
                movement: Stat::of(&pick(|c| c.movement_total)).expect("non-empty group"),
                service: Stat::of(&pick(|c| c.service_total)).expect("non-empty group"),
                energy: Stat::of(&energy),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(a.policy.cmp(&b.policy)));
    Report { rows, missing }
}

/// Aggregates a finished run directory and writes `report.csv` next to it.
pub fn report(dir: impl AsRef<Path>) -> Result<Report> {
    let summary = load_summary(dir.as_ref())?;
    let rep = aggregate(&summary.cells);
    std::fs::write(dir.as_ref().join("report.csv"), rep.to_csv())?;
    Ok(rep)
}
