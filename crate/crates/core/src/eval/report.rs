use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{rlp, trajectory_fip, trajectory_resolution_time, EpsilonPolicy};
use crate::dataset::{GtDataset, GtTrajectory};
use crate::engine::{RunLabel, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairingError {
    #[error("no trajectories to evaluate")]
    Empty,
    #[error("trajectory (seed {seed}, replicate {replicate}) carries no case id")]
    MissingCaseId { seed: u64, replicate: u32 },
    #[error("no ground-truth case for {0:?}")]
    Unpaired(Vec<String>),
    #[error("trajectory for {case_id} is labelled {found:?}, expected {expected:?}")]
    LabelMismatch { case_id: String, expected: RunLabel, found: RunLabel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    pub dataset: GtDataset,
    pub n_manufacturers: usize,
    pub t_gt: u32,
    /// Mean over replicates.
    pub t_sim: f64,
    pub t_sim_replicates: Vec<u32>,
    /// Absent for zero-shot predictions, which carry no announcements.
    pub fip_pct: Option<f64>,
    pub rlp_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub dataset: GtDataset,
    pub cases: usize,
    pub mean_fip: Option<f64>,
    pub mean_rlp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario: RunLabel,
    pub epsilon: f64,
    pub aggregation: String,
    pub cases: Vec<CaseMetrics>,
    pub datasets: Vec<DatasetMetrics>,
}

pub const AGGREGATION: &str = "replicates averaged per case, then cases averaged per dataset";

/// Orders `GT-2` before `GT-10`.
fn case_order(id: &str) -> (String, u64, String) {
    let digits = id.len() - id.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (stem, num) = id.split_at(id.len() - digits);
    (stem.to_owned(), num.parse().unwrap_or(0), id.to_owned())
}

/// Order-independent mean: sorting first makes the floating-point sum reproducible.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pairs every trajectory with its ground-truth case by `case_id` and scores it.
pub fn evaluate(
    trajectories: &[Trajectory],
    gt: &[GtTrajectory],
    scenario: RunLabel,
    eps: EpsilonPolicy,
) -> Result<MetricReport, PairingError> {
    if trajectories.is_empty() {
        return Err(PairingError::Empty);
    }
    let gt_by_id: BTreeMap<&str, &GtTrajectory> = gt.iter().map(|g| (g.case_id.as_str(), g)).collect();
    let mut groups: BTreeMap<(String, u64, String), Vec<&Trajectory>> = BTreeMap::new();
    let mut unpaired = Vec::new();
    for t in trajectories {
        let Some(id) = t.header.case_id.as_deref() else {
            return Err(PairingError::MissingCaseId { seed: t.header.seed, replicate: t.header.replicate });
        };
        if t.header.label != scenario {
            return Err(PairingError::LabelMismatch { case_id: id.to_owned(), expected: scenario, found: t.header.label });
        }
        if !gt_by_id.contains_key(id) {
            unpaired.push(id.to_owned());
            continue;
        }
        groups.entry(case_order(id)).or_default().push(t);
    }
    if !unpaired.is_empty() {
        unpaired.sort();
        unpaired.dedup();
        return Err(PairingError::Unpaired(unpaired));
    }

    let with_fip = scenario != RunLabel::ZeroShot;
    let mut cases = Vec::with_capacity(groups.len());
    for ((_, _, id), runs) in groups {
        let g = gt_by_id[id.as_str()];
        let mut t_sims: Vec<u32> = runs.iter().map(|t| trajectory_resolution_time(t, eps)).collect();
        t_sims.sort_unstable();
        let mut rlps: Vec<f64> = t_sims.iter().map(|t| rlp(f64::from(*t), g.horizon)).collect();
        let mut fips: Vec<f64> = runs.iter().map(|t| trajectory_fip(t)).collect();
        cases.push(CaseMetrics {
            case_id: id,
            dataset: g.dataset,
            n_manufacturers: g.n_manufacturers,
            t_gt: g.horizon,
            t_sim: mean(&mut t_sims.iter().map(|t| f64::from(*t)).collect::<Vec<_>>()),
            t_sim_replicates: t_sims,
            fip_pct: with_fip.then(|| mean(&mut fips)),
            rlp_pct: mean(&mut rlps),
        });
    }

    let mut by_dataset: BTreeMap<GtDataset, Vec<&CaseMetrics>> = BTreeMap::new();
    for c in &cases {
        by_dataset.entry(c.dataset).or_default().push(c);
    }
    let datasets = by_dataset
        .into_iter()
        .map(|(dataset, cs)| DatasetMetrics {
            dataset,
            cases: cs.len(),
            mean_fip: with_fip.then(|| mean(&mut cs.iter().filter_map(|c| c.fip_pct).collect::<Vec<_>>())),
            mean_rlp: mean(&mut cs.iter().map(|c| c.rlp_pct).collect::<Vec<_>>()),
        })
        .collect();
    Ok(MetricReport { scenario, epsilon: eps.epsilon(), aggregation: AGGREGATION.to_owned(), cases, datasets })
}

fn scenario_name(s: RunLabel) -> &'static str {
    match s {
        RunLabel::Simulated => "simulated",
        RunLabel::ZeroShot => "zero-shot",
    }
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.precision$}"))
}

impl MetricReport {
    pub fn dataset(&self, d: GtDataset) -> Option<&DatasetMetrics> {
        self.datasets.iter().find(|m| m.dataset == d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text summary: the dataset table first, then one row per case.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} (epsilon {})", AGGREGATION, self.epsilon);
        let _ = writeln!(out, "{:<10}  {:<8}  {:>5}  {:>12}  {:>12}", "Scenario", "Dataset", "Cases", "Avg. FIP (%)", "Avg. RLP (%)");
        for d in &self.datasets {
            let _ = writeln!(
                out,
                "{:<10}  {:<8}  {:>5}  {:>12}  {:>12.2}",
                scenario_name(self.scenario),
                d.dataset.as_str(),
                d.cases,
                opt(d.mean_fip, 1),
                d.mean_rlp
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8}  {:<8}  {:>3}  {:>4}  {:>6}  {:>8}  {:>8}", "Case", "Dataset", "n", "T_gt", "T_sim", "FIP (%)", "RLP (%)");
        for c in &self.cases {
            let _ = writeln!(
                out,
                "{:<8}  {:<8}  {:>3}  {:>4}  {:>6.2}  {:>8}  {:>8.2}",
                c.case_id,
                c.dataset.as_str(),
                c.n_manufacturers,
                c.t_gt,
                c.t_sim,
                opt(c.fip_pct, 1),
                c.rlp_pct
            );
        }
        out
    }
}

/// Per-period series for external plotting, one row per record. `t_gt` is the
/// ground-truth resolution quarter when the run is paired with a case.
pub fn plot_csv<'a>(runs: impl IntoIterator<Item = (&'a Trajectory, Option<u32>)>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "case_id",
        "replicate",
        "period",
        "total_demand",
        "total_supply",
        "shortage",
        "buyer_inventory",
        "patient_demand",
        "fda_severity",
        "t_gt",
    ])
    .expect("in-memory write");
    for (t, t_gt) in runs {
        for r in &t.records {
            let severity = r.fda_announcement.as_ref().map_or("none", |s| s.severity.as_str());
            w.write_record([
                t.header.case_id.clone().unwrap_or_default(),
                t.header.replicate.to_string(),
                r.period.to_string(),
                r.total_demand.to_string(),
                r.total_supply.to_string(),
                r.shortage.to_string(),
                r.buyer_inventory.to_string(),
                r.patient_demand.to_string(),
                severity.to_owned(),
                t_gt.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_case_order() {
        let mut ids = vec!["GT-10", "GT-2", "GT-1"];
        ids.sort_by_key(|i| case_order(i));
        assert_eq!(ids, ["GT-1", "GT-2", "GT-10"]);
    }
}
