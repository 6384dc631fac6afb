use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ndc::{package_code, Ndc9, NdcDirectory};
use super::snapshot::{Reject, ShortageStatus, SnapshotRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReasonClass {
    SupplySide,
    DemandSide,
    RegulatoryPolicy,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonTag {
    pub class: ReasonClass,
    /// No cause was given at all.
    pub no_reason: bool,
    /// The cause given is a discontinuation by the manufacturer.
    pub discontinuation: bool,
}

/// Checked in order; the first table with a matching keyword wins. Regulatory comes
/// first so "regulatory delay" and "good manufacturing practice" do not read as supply.
const KEYWORDS: [(ReasonClass, &[&str]); 3] = [
    (
        ReasonClass::RegulatoryPolicy,
        &["good manufacturing practice", "gmp", "compliance", "complying", "regulatory", "warning letter", "import alert", "recall"],
    ),
    (
        ReasonClass::SupplySide,
        &["discontinu", "ingredient", "manufacturing delay", "delay", "raw material", "capacity", "shipping", "supply"],
    ),
    (ReasonClass::DemandSide, &["demand", "forecast"]),
];

const EMPTY_MARKERS: [&str; 4] = ["n/a", "na", "none", "not provided"];

pub fn classify_reason(text: &str) -> ReasonTag {
    let t = text.trim().to_lowercase();
    if t.is_empty() || EMPTY_MARKERS.contains(&t.as_str()) {
        return ReasonTag { class: ReasonClass::Other, no_reason: true, discontinuation: false };
    }
    let class = KEYWORDS
        .iter()
        .find(|(_, words)| words.iter().any(|w| t.contains(w)))
        .map_or(ReasonClass::Other, |(c, _)| *c);
    ReasonTag { class, no_reason: false, discontinuation: t.contains("discontinu") }
}

/// `LLLLL-PPPP / MM-DD-YYYY`.
pub fn event_id(ndc: &Ndc9, posting_date: NaiveDate) -> String {
    format!("{ndc} / {}", posting_date.format("%m-%d-%Y"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortageEvent {
    pub event_id: String,
    pub ndc: Ndc9,
    pub posting_date: NaiveDate,
    pub generic_name: String,
    pub company: String,
    pub reason_text: String,
    pub reason_class: ReasonClass,
    pub no_reason: bool,
    pub discontinuation: bool,
    pub first_seen: NaiveDate,
    pub last_seen: NaiveDate,
    pub sightings: usize,
    pub resolved: bool,
    pub resolved_on: Option<NaiveDate>,
    pub last_status: ShortageStatus,
    /// Package codes (or presentations without a code) mapped to whether that package
    /// was ever listed as discontinued.
    pub packages: BTreeMap<String, bool>,
    /// One presentation string, kept for the drug key.
    pub presentation: String,
}

/// Rows with a usable code, plus the rows quarantined for lack of one.
pub fn attach_ndc(records: Vec<SnapshotRecord>, directory: &NdcDirectory) -> (Vec<(SnapshotRecord, Ndc9)>, Vec<Reject>) {
    let mut ok = Vec::with_capacity(records.len());
    let mut quarantined = Vec::new();
    for r in records {
        match directory.extract(&r.presentation) {
            Ok(ndc) => ok.push((r, ndc)),
            Err(e) => quarantined.push(Reject {
                source: r.source.clone(),
                row: r.row,
                reason: e.to_string(),
                raw: vec![r.generic_name, r.company, r.presentation],
            }),
        }
    }
    (ok, quarantined)
}

/// Absences from consecutive later snapshots that count as resolution.
pub const RESOLVED_AFTER_ABSENCES: usize = 2;

/// Collapses sightings into one event per id. An event is resolved once it is listed
/// as resolved, or once it is missing from `RESOLVED_AFTER_ABSENCES` consecutive
/// snapshots after its last sighting; `snapshot_dates` lists every snapshot taken.
pub fn dedup_events(rows: &[(SnapshotRecord, Ndc9)], snapshot_dates: &[NaiveDate]) -> Vec<ShortageEvent> {
    let mut groups: BTreeMap<String, Vec<&(SnapshotRecord, Ndc9)>> = BTreeMap::new();
    for row in rows {
        groups.entry(event_id(&row.1, row.0.posting_date)).or_default().push(row);
    }
    let dates: BTreeSet<NaiveDate> = snapshot_dates.iter().copied().collect();
    groups
        .into_iter()
        .map(|(id, mut sightings)| {
            sightings.sort_by(|a, b| (a.0.snapshot_date, &a.0.source, a.0.row).cmp(&(b.0.snapshot_date, &b.0.source, b.0.row)));
            let first = &sightings[0].0;
            let last = &sightings[sightings.len() - 1].0;
            let reason_text = sightings
                .iter()
                .map(|s| s.0.reason_text.trim())
                .find(|t| !t.is_empty())
                .unwrap_or("")
                .to_owned();
            let tag = classify_reason(&reason_text);
            let listed_resolved = sightings.iter().find(|s| s.0.status == ShortageStatus::Resolved).map(|s| s.0.snapshot_date);
            let later: Vec<NaiveDate> = dates.range(last.snapshot_date..).skip(1).copied().collect();
            let absent_resolved = (later.len() >= RESOLVED_AFTER_ABSENCES).then(|| later[0]);
            let resolved_on = listed_resolved.or(absent_resolved);
            let mut packages: BTreeMap<String, bool> = BTreeMap::new();
            for (r, _) in sightings.iter().map(|s| (&s.0, &s.1)) {
                let key = package_code(&r.presentation).unwrap_or_else(|| r.presentation.clone());
                *packages.entry(key).or_default() |= r.status == ShortageStatus::Discontinued;
            }
            let discontinued_status = packages.values().any(|d| *d);
            ShortageEvent {
                event_id: id,
                ndc: sightings[0].1.clone(),
                posting_date: first.posting_date,
                generic_name: first.generic_name.clone(),
                company: first.company.clone(),
                reason_text,
                reason_class: tag.class,
                no_reason: tag.no_reason,
                discontinuation: tag.discontinuation || discontinued_status,
                first_seen: first.snapshot_date,
                last_seen: last.snapshot_date,
                sightings: sightings.len(),
                resolved: resolved_on.is_some(),
                resolved_on,
                last_status: last.status,
                packages,
                presentation: first.presentation.clone(),
            }
        })
        .collect()
}
