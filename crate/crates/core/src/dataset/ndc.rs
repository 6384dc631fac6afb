use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NdcError {
    #[error("no NDC found in {0:?}")]
    NoNdc(String),
    #[error("no NDC directory entry matches {0:?}")]
    NoDirectoryMatch(String),
    #[error("{raw:?} matches several directory segmentations: {candidates:?}")]
    Ambiguous { raw: String, candidates: Vec<String> },
}

/// Labeler plus product code, canonical `LLLLL-PPPP`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ndc9 {
    labeler: String,
    product: String,
}

impl Ndc9 {
    /// Builds the canonical code from raw segments, restoring dropped leading zeros.
    pub fn from_segments(labeler: &str, product: &str) -> Option<Self> {
        let digits = |s: &str, max: usize| !s.is_empty() && s.len() <= max && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(labeler, 5) || !digits(product, 4) {
            return None;
        }
        Some(Self { labeler: format!("{labeler:0>5}"), product: format!("{product:0>4}") })
    }

    pub fn labeler(&self) -> &str {
        &self.labeler
    }

    pub fn product(&self) -> &str {
        &self.product
    }

    pub fn parse(canonical: &str) -> Option<Self> {
        let (l, p) = canonical.split_once('-')?;
        (l.len() == 5 && p.len() == 4).then(|| Self::from_segments(l, p)).flatten()
    }
}

impl fmt::Display for Ndc9 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.labeler, self.product)
    }
}

impl Serialize for Ndc9 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ndc9 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ndc9::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a canonical NDC9: {s}")))
    }
}

/// Product codes from the NDC directory, kept with their published segment lengths
/// so an unhyphenated string can be split the way its labeler actually files it.
#[derive(Debug, Clone, Default)]
pub struct NdcDirectory {
    /// Raw (labeler, product) segments as published, e.g. ("0409", "4888").
    raw: BTreeSet<(String, String)>,
    canonical: BTreeMap<Ndc9, (String, String)>,
}

/// Package-level splits a 10-digit code can have: 4-4-2, 5-3-2 and 5-4-1.
const TEN_DIGIT_SPLITS: [(usize, usize); 3] = [(4, 4), (5, 3), (5, 4)];

static HYPHENATED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{4,5})-(\d{3,4})(?:-(\d{1,2}))?\b").unwrap());
static BARE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{10,11})\b").unwrap());

impl NdcDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a product NDC in its published hyphenated form ("0409-4888").
    pub fn insert(&mut self, product_ndc: &str) -> bool {
        let Some((l, p)) = product_ndc.trim().split_once('-') else { return false };
        let Some(ndc) = Ndc9::from_segments(l, p) else { return false };
        self.raw.insert((l.to_owned(), p.to_owned()));
        self.canonical.insert(ndc, (l.to_owned(), p.to_owned()));
        true
    }

    /// Loads a directory CSV with a `PRODUCTNDC` column. Returns the directory and
    /// the number of rows that could not be read as product codes.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<(Self, usize), String> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        let col = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case("productndc"))
            .ok_or_else(|| "missing PRODUCTNDC column".to_owned())?;
        let mut dir = Self::new();
        let mut skipped = 0;
        for row in rdr.records() {
            match row {
                Ok(r) if r.get(col).is_some_and(|v| dir.insert(v)) => {}
                _ => skipped += 1,
            }
        }
        Ok((dir, skipped))
    }

    pub fn load(path: &Path) -> Result<(Self, usize), String> {
        let f = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_csv_reader(f)
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn contains(&self, ndc: &Ndc9) -> bool {
        self.canonical.contains_key(ndc)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Ndc9> {
        self.canonical.keys()
    }

    /// Published segmentation of a canonical code.
    pub fn published(&self, ndc: &Ndc9) -> Option<(&str, &str)> {
        self.canonical.get(ndc).map(|(l, p)| (l.as_str(), p.as_str()))
    }

    fn split_bare(&self, raw: &str, digits: &str) -> Result<Ndc9, NdcError> {
        if digits.len() == 11 {
            return Ok(Ndc9::from_segments(&digits[..5], &digits[5..9]).expect("11 ASCII digits"));
        }
        let mut found: Vec<Ndc9> = Vec::new();
        for (l, p) in TEN_DIGIT_SPLITS {
            let (lab, prod) = (&digits[..l], &digits[l..l + p]);
            if self.raw.contains(&(lab.to_owned(), prod.to_owned())) {
                let ndc = Ndc9::from_segments(lab, prod).expect("digits");
                if !found.contains(&ndc) {
                    found.push(ndc);
                }
            }
        }
        match found.len() {
            0 => Err(NdcError::NoDirectoryMatch(raw.to_owned())),
            1 => Ok(found.remove(0)),
            _ => Err(NdcError::Ambiguous { raw: raw.to_owned(), candidates: found.iter().map(Ndc9::to_string).collect() }),
        }
    }

    /// Finds the labeler + product code inside a presentation string. Hyphenated codes
    /// take their first two segments; bare 10-digit codes are split by directory lookup.
    pub fn extract(&self, presentation: &str) -> Result<Ndc9, NdcError> {
        if let Some(c) = HYPHENATED.captures(presentation) {
            if let Some(ndc) = Ndc9::from_segments(&c[1], &c[2]) {
                return Ok(ndc);
            }
        }
        if let Some(c) = BARE.captures(presentation) {
            return self.split_bare(presentation, &c[1]);
        }
        Err(NdcError::NoNdc(presentation.to_owned()))
    }
}

/// The full code as written in a presentation (kept to tell packages apart).
pub fn package_code(presentation: &str) -> Option<String> {
    HYPHENATED
        .find(presentation)
        .or_else(|| BARE.find(presentation))
        .map(|m| m.as_str().to_owned())
}

pub fn extract_ndc9(presentation: &str, directory: &NdcDirectory) -> Result<Ndc9, NdcError> {
    directory.extract(presentation)
}
