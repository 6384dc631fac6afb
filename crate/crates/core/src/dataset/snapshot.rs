use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortageStatus {
    Current,
    Resolved,
    Discontinued,
}

impl ShortageStatus {
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim().to_ascii_lowercase();
        if t.contains("discontinu") {
            Some(Self::Discontinued)
        } else if t.contains("resolved") {
            Some(Self::Resolved)
        } else if t.contains("current") {
            Some(Self::Current)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub snapshot_date: NaiveDate,
    /// File the row came from.
    pub source: String,
    /// 1-based data row within the file (the header is row 0).
    pub row: usize,
    pub generic_name: String,
    pub company: String,
    pub presentation: String,
    pub status: ShortageStatus,
    pub reason_text: String,
    pub posting_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub source: String,
    pub row: usize,
    pub reason: String,
    pub raw: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedSnapshots {
    pub records: Vec<SnapshotRecord>,
    pub rejects: Vec<Reject>,
    /// Distinct snapshot dates, ascending.
    pub snapshot_dates: Vec<NaiveDate>,
    pub rows_read: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    GenericName,
    Company,
    Presentation,
    Status,
    Reason,
    PostingDate,
}

const FIELDS: [(Field, &str, &[&str]); 6] = [
    (Field::GenericName, "generic_name", &["generic_name", "generic", "drug_name", "drug", "generic_name_active_ingredient"]),
    (Field::Company, "company", &["company", "company_name", "manufacturer", "labeler"]),
    (Field::Presentation, "presentation", &["presentation", "presentations", "product"]),
    (Field::Status, "status", &["status", "shortage_status"]),
    (Field::Reason, "reason", &["reason", "reason_for_shortage", "shortage_reason", "reasons"]),
    (Field::PostingDate, "posting_date", &["posting_date", "date_first_posted", "initial_posting_date", "date_posted"]),
];

fn normalize_header(h: &str) -> String {
    let mut out = String::new();
    for c in h.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_owned()
}

const DATE_FORMATS: [&str; 4] = ["%m/%d/%Y", "%Y-%m-%d", "%m-%d-%Y", "%m/%d/%y"];

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    DATE_FORMATS.iter().find_map(|f| NaiveDate::parse_from_str(t, f).ok())
}

static FILE_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d{4})-?(\d{2})-?(\d{2})").unwrap());

/// Snapshot date from a file name such as `shortages_2023-09-15.csv` or an archive
/// timestamp `20230915083000.csv`.
pub fn snapshot_date_from_name(name: &str) -> Option<NaiveDate> {
    FILE_DATE.captures_iter(name).find_map(|c| {
        let y = c[1].parse().ok()?;
        NaiveDate::from_ymd_opt(y, c[2].parse().ok()?, c[3].parse().ok()?)
    })
}

/// Parses one snapshot export. Layout problems fail the file; row problems become rejects.
pub fn parse_snapshot_text(
    source: &str,
    snapshot_date: NaiveDate,
    text: &str,
) -> Result<(Vec<SnapshotRecord>, Vec<Reject>, usize), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| DatasetError::Csv { file: source.to_owned(), message: e.to_string() })?
        .iter()
        .map(normalize_header)
        .collect();
    let mut columns = Vec::new();
    let mut missing = Vec::new();
    for (field, name, aliases) in FIELDS {
        match headers.iter().position(|h| aliases.contains(&h.as_str())) {
            Some(i) => columns.push((field, i)),
            None => missing.push(name.to_owned()),
        }
    }
    if !missing.is_empty() {
        return Err(DatasetError::LayoutMismatch { file: source.to_owned(), missing });
    }
    let col = |f: Field| columns.iter().find(|(g, _)| *g == f).map(|(_, i)| *i).expect("all columns resolved");

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut rows = 0;
    for (idx, row) in rdr.records().enumerate() {
        rows += 1;
        let row_no = idx + 1;
        let raw: Vec<String> = match &row {
            Ok(r) => r.iter().map(str::to_owned).collect(),
            Err(_) => Vec::new(),
        };
        let reject = |reason: &str| Reject { source: source.to_owned(), row: row_no, reason: reason.to_owned(), raw: raw.clone() };
        let r = match row {
            Ok(r) => r,
            Err(e) => {
                rejects.push(reject(&format!("unreadable row: {e}")));
                continue;
            }
        };
        let get = |f: Field| r.get(col(f)).unwrap_or("").to_owned();
        if r.len() < headers.len() {
            rejects.push(reject("too few fields"));
            continue;
        }
        let presentation = get(Field::Presentation);
        if presentation.is_empty() {
            rejects.push(reject("empty presentation"));
            continue;
        }
        let Some(posting_date) = parse_date(&get(Field::PostingDate)) else {
            rejects.push(reject("bad posting_date"));
            continue;
        };
        let Some(status) = ShortageStatus::parse(&get(Field::Status)) else {
            rejects.push(reject("bad status"));
            continue;
        };
        records.push(SnapshotRecord {
            snapshot_date,
            source: source.to_owned(),
            row: row_no,
            generic_name: get(Field::GenericName),
            company: get(Field::Company),
            presentation,
            status,
            reason_text: get(Field::Reason),
            posting_date,
        });
    }
    Ok((records, rejects, rows))
}

pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let entries = std::fs::read_dir(dir).map_err(|e| DatasetError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(DatasetError::NoSnapshots(dir.display().to_string()));
    }
    Ok(files)
}

/// Reads every `*.csv` snapshot in `dir`, in file-name order.
pub fn parse_snapshots(dir: &Path) -> Result<ParsedSnapshots, DatasetError> {
    let mut out = ParsedSnapshots::default();
    for path in snapshot_files(dir)? {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        let date = snapshot_date_from_name(&name).ok_or_else(|| DatasetError::SnapshotDate(name.clone()))?;
        let bytes = std::fs::read(&path).map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let text = String::from_utf8_lossy(&bytes);
        let (records, rejects, rows) = parse_snapshot_text(&name, date, &text)?;
        out.records.extend(records);
        out.rejects.extend(rejects);
        out.rows_read += rows;
        out.snapshot_dates.push(date);
    }
    out.snapshot_dates.sort();
    out.snapshot_dates.dedup();
    Ok(out)
}
