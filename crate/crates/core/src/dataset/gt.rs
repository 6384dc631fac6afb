use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::events::ShortageEvent;
use super::DatasetError;
use crate::market::MAX_HORIZON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GtDataset {
    #[serde(rename = "FDA-Disc")]
    FdaDisc,
    #[serde(rename = "FDA-NR")]
    FdaNr,
}

impl GtDataset {
    pub fn as_str(self) -> &'static str {
        match self {
            GtDataset::FdaDisc => "FDA-Disc",
            GtDataset::FdaNr => "FDA-NR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtTrajectory {
    pub case_id: String,
    pub drug_key: String,
    pub dataset: GtDataset,
    /// Manufacturers (labelers) that supplied the drug.
    pub n_manufacturers: usize,
    /// Duration in calendar quarters.
    pub horizon: u32,
    /// Discontinued-package share per manufacturer, largest first (FDA-Disc only).
    #[serde(default)]
    pub per_mfr_delta: Vec<f64>,
    pub labelers: Vec<String>,
    pub event_ids: Vec<String>,
    pub start: NaiveDate,
    pub resolved_on: NaiveDate,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedCase {
    pub drug_key: String,
    pub reason: String,
    pub n_manufacturers: usize,
    pub horizon: Option<u32>,
    pub event_ids: Vec<String>,
}

/// Which date a trajectory starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartAnchor {
    /// First snapshot in which any of the drug's events appears.
    #[default]
    FirstSeen,
    /// Earliest posting date among the drug's events.
    PostingDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtOptions {
    pub start: StartAnchor,
    pub days_per_quarter: f64,
    pub max_quarters: u32,
}

impl Default for GtOptions {
    fn default() -> Self {
        Self { start: StartAnchor::FirstSeen, days_per_quarter: 91.25, max_quarters: MAX_HORIZON }
    }
}

/// `ceil(days / days_per_quarter)`, at least 1.
pub fn quarters_between(start: NaiveDate, end: NaiveDate, days_per_quarter: f64) -> u32 {
    let days = (end - start).num_days().max(0) as f64;
    ((days / days_per_quarter).ceil() as u32).max(1)
}

static STRENGTH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(?:usp\s*)?(mcg|mg|meq|g|units?|iu|%|ml)(?:\s*/\s*(\d+(?:\.\d+)?)?\s*(ml|l|g|mg))?").unwrap()
});

static THOUSANDS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d),(\d{3})").unwrap());

const FORMS: [&str; 16] = [
    "injection", "infusion", "tablet", "capsule", "solution", "suspension", "emulsion", "powder", "cream", "ointment",
    "gel", "patch", "inhalation", "spray", "drops", "syrup",
];

/// Lowercased molecule name, strengths found in the presentation and dosage-form words.
pub fn drug_key(generic_name: &str, presentation: &str) -> String {
    let name: String = generic_name
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let text = THOUSANDS.replace_all(&format!("{generic_name} {presentation}").to_lowercase(), "$1$2").into_owned();
    let mut strengths: Vec<String> = STRENGTH
        .captures_iter(&text)
        // A bare volume ("10 mL vial") describes the package, not the drug.
        .filter(|c| c.get(4).is_some() || &c[2] != "ml")
        .map(|c| {
            let mut s = format!("{}{}", &c[1], c[2].trim_end_matches('s'));
            if let Some(unit) = c.get(4) {
                s.push('/');
                if let Some(per) = c.get(3) {
                    s.push_str(per.as_str());
                }
                s.push_str(unit.as_str());
            }
            s
        })
        .collect();
    strengths.sort();
    strengths.dedup();
    let words: BTreeSet<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
    let forms: Vec<&str> = FORMS.iter().copied().filter(|f| words.contains(f) || words.contains(&format!("{f}s")[..])).collect();
    format!("{name}|{}|{}", strengths.join("+"), forms.join("+"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GtBuild {
    pub trajectories: Vec<GtTrajectory>,
    pub excluded: Vec<ExcludedCase>,
}

/// Groups events by drug and keeps the resolved, competitive, short-enough cases whose
/// cause is a discontinuation (FDA-Disc) or missing altogether (FDA-NR).
pub fn build_gt(events: &[ShortageEvent], opts: &GtOptions) -> GtBuild {
    let mut groups: BTreeMap<String, Vec<&ShortageEvent>> = BTreeMap::new();
    for e in events {
        groups.entry(drug_key(&e.generic_name, &e.presentation)).or_default().push(e);
    }
    let mut out = GtBuild::default();
    for (key, group) in groups {
        let labelers: BTreeSet<String> = group.iter().map(|e| e.ndc.labeler().to_owned()).collect();
        let n = labelers.len();
        let event_ids: Vec<String> = group.iter().map(|e| e.event_id.clone()).collect();
        let exclude = |out: &mut GtBuild, reason: &str, horizon: Option<u32>| {
            out.excluded.push(ExcludedCase {
                drug_key: key.clone(),
                reason: reason.to_owned(),
                n_manufacturers: n,
                horizon,
                event_ids: event_ids.clone(),
            })
        };

        let dataset = if group.iter().any(|e| e.discontinuation) {
            GtDataset::FdaDisc
        } else if group.iter().all(|e| e.no_reason) {
            GtDataset::FdaNr
        } else {
            exclude(&mut out, "cause", None);
            continue;
        };
        let resolved_on = group.iter().map(|e| e.resolved_on).collect::<Option<Vec<_>>>().and_then(|d| d.into_iter().max());
        let Some(resolved_on) = resolved_on else {
            exclude(&mut out, "unresolved", None);
            continue;
        };
        if n < 2 {
            exclude(&mut out, "monopoly", None);
            continue;
        }
        let start = match opts.start {
            StartAnchor::FirstSeen => group.iter().map(|e| e.first_seen).min(),
            StartAnchor::PostingDate => group.iter().map(|e| e.posting_date).min(),
        }
        .expect("group is non-empty");
        let horizon = quarters_between(start, resolved_on, opts.days_per_quarter);
        if horizon > opts.max_quarters {
            exclude(&mut out, &format!("T>{}", opts.max_quarters), Some(horizon));
            continue;
        }

        let per_mfr_delta = match dataset {
            GtDataset::FdaNr => Vec::new(),
            GtDataset::FdaDisc => {
                let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
                for e in &group {
                    let slot = per.entry(e.ndc.labeler()).or_default();
                    for &disc in e.packages.values() {
                        slot.0 += usize::from(disc);
                        slot.1 += 1;
                    }
                }
                // A discontinuation cause with no package listed as discontinued still
                // discontinues that event's packages.
                for e in &group {
                    if e.discontinuation && !e.packages.values().any(|d| *d) {
                        per.entry(e.ndc.labeler()).or_default().0 += e.packages.len();
                    }
                }
                let mut deltas: Vec<f64> =
                    per.values().map(|&(d, t)| if t == 0 { 0.0 } else { d.min(t) as f64 / t as f64 }).collect();
                deltas.sort_by(|a, b| b.total_cmp(a));
                deltas
            }
        };
        out.trajectories.push(GtTrajectory {
            case_id: String::new(),
            drug_key: key.clone(),
            dataset,
            n_manufacturers: n,
            horizon,
            per_mfr_delta,
            labelers: labelers.into_iter().collect(),
            event_ids,
            start,
            resolved_on,
            resolved: true,
        });
    }
    for (k, t) in out.trajectories.iter_mut().enumerate() {
        t.case_id = format!("GT-{}", k + 1);
    }
    for t in &out.trajectories {
        debug_assert!(t.resolved && t.n_manufacturers >= 2 && t.horizon <= opts.max_quarters);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub dataset: GtDataset,
    pub count: usize,
    pub mean_horizon: f64,
    pub mean_manufacturers: f64,
    /// Mean disruption magnitude: per case, the mean of its non-zero deltas (FDA-Disc),
    /// or the stochastic magnitude used for simulation (FDA-NR).
    pub mean_delta: f64,
    /// Disruption probability used for simulation; absent for FDA-Disc.
    pub disruption_prob: Option<f64>,
}

/// Probability and magnitude used for FDA-NR cases.
pub const NR_DISRUPTION_PROB: f64 = 0.05;
pub const NR_DISRUPTION_MAGNITUDE: f64 = 0.2;

pub fn case_delta(t: &GtTrajectory) -> f64 {
    let nonzero: Vec<f64> = t.per_mfr_delta.iter().copied().filter(|d| *d > 0.0).collect();
    if nonzero.is_empty() {
        0.0
    } else {
        nonzero.iter().sum::<f64>() / nonzero.len() as f64
    }
}

pub fn dataset_stats(trajectories: &[GtTrajectory]) -> Result<Vec<DatasetStats>, DatasetError> {
    if trajectories.is_empty() {
        return Err(DatasetError::EmptySet);
    }
    let mut by: BTreeMap<GtDataset, Vec<&GtTrajectory>> = BTreeMap::new();
    for t in trajectories {
        by.entry(t.dataset).or_default().push(t);
    }
    Ok(by
        .into_iter()
        .map(|(dataset, ts)| {
            let k = ts.len() as f64;
            let mean = |f: &dyn Fn(&GtTrajectory) -> f64| ts.iter().map(|t| f(t)).sum::<f64>() / k;
            let (mean_delta, disruption_prob) = match dataset {
                GtDataset::FdaDisc => (mean(&case_delta), None),
                GtDataset::FdaNr => (NR_DISRUPTION_MAGNITUDE, Some(NR_DISRUPTION_PROB)),
            };
            DatasetStats {
                dataset,
                count: ts.len(),
                mean_horizon: mean(&|t| f64::from(t.horizon)),
                mean_manufacturers: mean(&|t| t.n_manufacturers as f64),
                mean_delta,
                disruption_prob,
            }
        })
        .collect())
}
