//! Curation of archived shortage-list snapshots into deduplicated events and
//! ground-truth trajectories.
//!
//! Stages: [`parse_snapshots`] → [`attach_ndc`] → [`dedup_events`] → [`build_gt`] →
//! [`dataset_stats`]. [`curate`] runs them all and keeps every reject and exclusion.

mod events;
mod gt;
mod ndc;
mod snapshot;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use events::{attach_ndc, classify_reason, dedup_events, event_id, ReasonClass, ReasonTag, ShortageEvent, RESOLVED_AFTER_ABSENCES};
pub use gt::{
    build_gt, case_delta, dataset_stats, drug_key, quarters_between, DatasetStats, ExcludedCase, GtBuild, GtDataset,
    GtOptions, GtTrajectory, StartAnchor, NR_DISRUPTION_MAGNITUDE, NR_DISRUPTION_PROB,
};
pub use ndc::{extract_ndc9, package_code, Ndc9, NdcDirectory, NdcError};
pub use snapshot::{
    parse_date, parse_snapshot_text, parse_snapshots, snapshot_date_from_name, snapshot_files, ParsedSnapshots, Reject,
    ShortageStatus, SnapshotRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{file}: missing columns {missing:?}")]
    LayoutMismatch { file: String, missing: Vec<String> },
    #[error("{file}: {message}")]
    Csv { file: String, message: String },
    #[error("no snapshot CSV files in {0}")]
    NoSnapshots(String),
    #[error("cannot read a snapshot date from file name {0:?}")]
    SnapshotDate(String),
    #[error("NDC directory: {0}")]
    Directory(String),
    #[error("no trajectories to summarize")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationSummary {
    pub snapshots: usize,
    pub rows_read: usize,
    pub rejected_rows: usize,
    pub quarantined_rows: usize,
    pub sightings: usize,
    pub events: usize,
    pub resolved_events: usize,
    pub trajectories: usize,
    pub excluded_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curation {
    pub summary: CurationSummary,
    pub rejects: Vec<Reject>,
    pub quarantined: Vec<Reject>,
    pub events: Vec<ShortageEvent>,
    pub gt: GtBuild,
    pub stats: Vec<DatasetStats>,
}

/// Runs the whole pipeline over a snapshot directory and an NDC directory CSV.
pub fn curate(snapshot_dir: &Path, directory_csv: &Path, opts: &GtOptions) -> Result<Curation, DatasetError> {
    let (directory, _) = NdcDirectory::load(directory_csv).map_err(DatasetError::Directory)?;
    let parsed = parse_snapshots(snapshot_dir)?;
    Ok(curate_parsed(parsed, &directory, opts))
}

pub fn curate_parsed(parsed: ParsedSnapshots, directory: &NdcDirectory, opts: &GtOptions) -> Curation {
    let ParsedSnapshots { records, rejects, snapshot_dates, rows_read } = parsed;
    let (rows, quarantined) = attach_ndc(records, directory);
    let events = dedup_events(&rows, &snapshot_dates);
    let gt = build_gt(&events, opts);
    let stats = dataset_stats(&gt.trajectories).unwrap_or_default();
    let summary = CurationSummary {
        snapshots: snapshot_dates.len(),
        rows_read,
        rejected_rows: rejects.len(),
        quarantined_rows: quarantined.len(),
        sightings: events.iter().map(|e| e.sightings).sum(),
        events: events.len(),
        resolved_events: events.iter().filter(|e| e.resolved).count(),
        trajectories: gt.trajectories.len(),
        excluded_cases: gt.excluded.len(),
    };
    debug_assert_eq!(summary.rows_read, summary.sightings + summary.rejected_rows + summary.quarantined_rows);
    Curation { summary, rejects, quarantined, events, gt, stats }
}

impl Curation {
    /// Writes `events.json`, `gt.json`, `stats.json`, `rejects.json`, `audit.json`
    /// and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("events.json"), &self.events)?;
        write_json(&dir.join("gt.json"), &self.gt.trajectories)?;
        write_json(&dir.join("stats.json"), &self.stats)?;
        let all_rejects: Vec<&Reject> = self.rejects.iter().chain(&self.quarantined).collect();
        write_json(&dir.join("rejects.json"), &all_rejects)?;
        write_json(&dir.join("audit.json"), &self.gt.excluded)?;
        write_json(&dir.join("summary.json"), &self.summary)
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("curation output serializes");
    text.push('\n');
    std::fs::write(path, text)
}

pub fn read_gt(path: &Path) -> Result<Vec<GtTrajectory>, DatasetError> {
    let io = |e: std::io::Error| DatasetError::Io { path: path.display().to_string(), message: e.to_string() };
    let bytes = std::fs::read(path).map_err(io)?;
    serde_json::from_slice(&bytes).map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })
}
