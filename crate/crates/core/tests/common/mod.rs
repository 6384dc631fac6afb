#![allow(dead_code)]

use chrono::NaiveDate;
use shortage_core::agents::{FdaSignal, Severity};
use shortage_core::dataset::{GtDataset, GtTrajectory};
use shortage_core::engine::{PolicyIds, RunLabel, Trajectory, TrajectoryHeader, TrajectoryRecord};
use shortage_core::market::SimConfig;

/// A trajectory with only the fields the metrics read: shortage, supply and announcements.
pub fn synthetic(case_id: &str, n: usize, shortages: &[f64], announced: &[bool], label: RunLabel) -> Trajectory {
    assert_eq!(shortages.len(), announced.len());
    let cfg = SimConfig { n_manufacturers: n, horizon: shortages.len() as u32, ..SimConfig::default() };
    let records = shortages
        .iter()
        .zip(announced)
        .enumerate()
        .map(|(i, (s, a))| {
            let period = i as u32 + 1;
            TrajectoryRecord {
                period,
                total_demand: 1.0,
                total_supply: 1.0 - s,
                shortage: *s,
                patient_demand: 1.0,
                unmet_patient_demand: *s,
                buyer_inventory: 0.0,
                fda_announcement: a.then(|| FdaSignal {
                    period,
                    severity: Severity::Elevated,
                    text: "Shortage notice.".into(),
                    urgency: Severity::Elevated.urgency(),
                }),
                disrupted_set: Vec::new(),
                new_disruptions: Vec::new(),
                per_mfr_quantity: vec![(1.0 - s) / n as f64; n],
                per_mfr_capacity: vec![1.0 / n as f64; n],
                per_mfr_investment: vec![0.0; n],
                decisions: Vec::new(),
                costs: None,
                baseline: None,
                flags: Vec::new(),
            }
        })
        .collect();
    Trajectory {
        header: TrajectoryHeader {
            config: cfg,
            seed: 0,
            replicate: 0,
            policies: PolicyIds::default(),
            case_id: Some(case_id.to_owned()),
            label,
        },
        records,
    }
}

pub fn gt_case(case_id: &str, dataset: GtDataset, n: usize, horizon: u32) -> GtTrajectory {
    let d = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
    GtTrajectory {
        case_id: case_id.to_owned(),
        drug_key: format!("drug {case_id}"),
        dataset,
        n_manufacturers: n,
        horizon,
        per_mfr_delta: Vec::new(),
        labelers: Vec::new(),
        event_ids: Vec::new(),
        start: d,
        resolved_on: d,
        resolved: true,
    }
}

/// Shortage 0.1 up to `t_sim - 1`, then cleared; `t_sim = T + 1` never clears.
pub fn shortages_resolving_at(horizon: u32, t_sim: u32) -> Vec<f64> {
    (1..=horizon).map(|t| if t < t_sim { 0.1 } else { 0.0 }).collect()
}
