use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{Assessment, Decision, FdaSignal, Role, RoleContext};
use crate::market::{BuyerAccounting, SimConfig};

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunLabel {
    /// Produced by the agent simulation.
    #[default]
    Simulated,
    /// A whole-trajectory prediction from one model completion.
    ZeroShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PolicyIds {
    pub manufacturers: Vec<String>,
    pub buyer: String,
    pub fda: String,
}

/// One analyze/decide exchange. `seq` increases across the whole run, so the
/// order in which agents acted can be read back from the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub seq: u64,
    pub role: Role,
    pub backend: String,
    pub context: RoleContext,
    pub assessment: Assessment,
    pub decision: Decision,
    #[serde(default)]
    pub flags: Vec<String>,
    /// True when the configured backend failed and the rule backend stood in.
    #[serde(default)]
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodCosts {
    pub buyer: BuyerAccounting,
    pub manufacturer_profit: Vec<f64>,
}

/// Per-period free text attached to a zero-shot prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineNotes {
    pub reasoning: String,
    pub confidence: String,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub period: u32,
    /// Buyer order D, the demand the market clears against.
    pub total_demand: f64,
    pub total_supply: f64,
    /// `(D - Q)^+`.
    pub shortage: f64,
    pub patient_demand: f64,
    pub unmet_patient_demand: f64,
    pub buyer_inventory: f64,
    pub fda_announcement: Option<FdaSignal>,
    pub disrupted_set: Vec<usize>,
    #[serde(default)]
    pub new_disruptions: Vec<usize>,
    #[serde(default)]
    pub per_mfr_quantity: Vec<f64>,
    #[serde(default)]
    pub per_mfr_capacity: Vec<f64>,
    /// Capacity units each manufacturer committed this quarter.
    #[serde(default)]
    pub per_mfr_investment: Vec<f64>,
    #[serde(default)]
    pub decisions: Vec<DecisionEntry>,
    #[serde(default)]
    pub costs: Option<PeriodCosts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineNotes>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl TrajectoryRecord {
    pub fn intervened(&self) -> bool {
        self.fda_announcement.as_ref().is_some_and(FdaSignal::is_intervention)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub config: SimConfig,
    pub seed: u64,
    #[serde(default)]
    pub replicate: u32,
    pub policies: PolicyIds,
    #[serde(default)]
    pub case_id: Option<String>,
    #[serde(default)]
    pub label: RunLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn horizon(&self) -> u32 {
        self.header.config.horizon
    }

    pub fn n_manufacturers(&self) -> usize {
        self.header.config.n_manufacturers
    }

    pub fn shortages(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.shortage).collect()
    }

    pub fn signals(&self) -> Vec<Option<&FdaSignal>> {
        self.records.iter().map(|r| r.fda_announcement.as_ref()).collect()
    }

    /// Records as JSON lines, one per period, in period order.
    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn header_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.header).expect("header serializes");
        s.push('\n');
        s
    }

    /// Writes `<stem>.header.json` and `<stem>.jsonl` into `dir`; returns both paths.
    pub fn write_files(&self, dir: &Path, stem: &str) -> io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let header = dir.join(format!("{stem}.header.json"));
        let records = dir.join(format!("{stem}.jsonl"));
        fs::write(&header, self.header_json())?;
        let mut f = io::BufWriter::new(fs::File::create(&records)?);
        f.write_all(self.records_jsonl().as_bytes())?;
        f.flush()?;
        Ok((header, records))
    }

    /// Reads a trajectory from its `.jsonl` path (the header is found next to it).
    pub fn read_files(records_path: &Path) -> io::Result<Self> {
        let header_path = header_path_for(records_path);
        let header: TrajectoryHeader = serde_json::from_slice(&fs::read(&header_path)?).map_err(invalid)?;
        let reader = io::BufReader::new(fs::File::open(records_path)?);
        let mut records = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line).map_err(invalid)?);
        }
        Ok(Self { header, records })
    }
}

fn invalid(e: serde_json::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

pub fn header_path_for(records_path: &Path) -> PathBuf {
    let stem = records_path.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    records_path.with_file_name(format!("{stem}.header.json"))
}

/// Every `.jsonl` trajectory under `dir`, sorted by path.
pub fn read_dir(dir: &Path) -> io::Result<Vec<(PathBuf, Trajectory)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl") && header_path_for(p).exists())
        .collect();
    paths.sort();
    paths.into_iter().map(|p| Trajectory::read_files(&p).map(|t| (p, t))).collect()
}
