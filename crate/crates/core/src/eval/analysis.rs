use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::Role;
use crate::engine::Trajectory;

/// `(1/T) Σ_t Σ_m q_{m,t}`. Records without per-manufacturer detail (zero-shot
/// predictions) contribute their total supply.
pub fn avg_supply_per_period(t: &Trajectory) -> f64 {
    if t.records.is_empty() {
        return 0.0;
    }
    let total: f64 = t
        .records
        .iter()
        .map(|r| if r.per_mfr_quantity.is_empty() { r.total_supply } else { r.per_mfr_quantity.iter().sum() })
        .sum();
    total / t.records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CompetitionBin {
    #[serde(rename = "{2}")]
    Two,
    #[serde(rename = "{3}")]
    Three,
    #[serde(rename = "(3,5]")]
    FourToFive,
    #[serde(rename = "(5,10]")]
    SixToTen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{0} manufacturers falls outside the competition bins (2..=10)")]
pub struct UnbinnableN(pub usize);

impl CompetitionBin {
    pub const ALL: [CompetitionBin; 4] = [Self::Two, Self::Three, Self::FourToFive, Self::SixToTen];

    pub fn of(n: usize) -> Result<Self, UnbinnableN> {
        match n {
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            4..=5 => Ok(Self::FourToFive),
            6..=10 => Ok(Self::SixToTen),
            _ => Err(UnbinnableN(n)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Two => "{2}",
            Self::Three => "{3}",
            Self::FourToFive => "(3,5]",
            Self::SixToTen => "(5,10]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin: CompetitionBin,
    pub trajectories: usize,
    /// Absent for an empty bin.
    pub mean_avg_supply: Option<f64>,
}

/// Mean of [`avg_supply_per_period`] within each of the four bins, always in bin order.
pub fn competition_bins(trajectories: &[Trajectory]) -> Result<Vec<BinSummary>, UnbinnableN> {
    let mut per: BTreeMap<CompetitionBin, Vec<f64>> = BTreeMap::new();
    for t in trajectories {
        per.entry(CompetitionBin::of(t.n_manufacturers())?).or_default().push(avg_supply_per_period(t));
    }
    Ok(CompetitionBin::ALL
        .iter()
        .map(|&bin| {
            let mut v = per.remove(&bin).unwrap_or_default();
            v.sort_by(f64::total_cmp);
            BinSummary {
                bin,
                trajectories: v.len(),
                mean_avg_supply: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64),
            }
        })
        .collect())
}

/// Case-folded tokens with punctuation treated as a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NgramCounts {
    pub documents: usize,
    pub tokens: usize,
    pub unigrams: BTreeMap<String, usize>,
    pub bigrams: BTreeMap<String, usize>,
}

impl NgramCounts {
    pub fn add(&mut self, text: &str) {
        let toks = tokenize(text);
        self.documents += 1;
        self.tokens += toks.len();
        for w in &toks {
            *self.unigrams.entry(w.clone()).or_default() += 1;
        }
        for pair in toks.windows(2) {
            *self.bigrams.entry(format!("{} {}", pair[0], pair[1])).or_default() += 1;
        }
    }

    /// Count for a unigram or (space-separated) bigram.
    pub fn count(&self, term: &str) -> usize {
        let toks = tokenize(term);
        match toks.len() {
            1 => self.unigrams.get(&toks[0]).copied().unwrap_or(0),
            2 => self.bigrams.get(&toks.join(" ")).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Occurrences per token.
    pub fn frequency(&self, term: &str) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.count(term) as f64 / self.tokens as f64
        }
    }
}

/// Unigram and bigram counts per bin.
pub fn rationale_ngrams<'a, B: Ord + Clone>(docs: impl IntoIterator<Item = (B, &'a str)>) -> BTreeMap<B, NgramCounts> {
    let mut out: BTreeMap<B, NgramCounts> = BTreeMap::new();
    for (bin, text) in docs {
        out.entry(bin).or_default().add(text);
    }
    out
}

/// Count of `term` in `a` relative to `b`; `None` when `b` never uses it.
pub fn count_ratio(a: &NgramCounts, b: &NgramCounts, term: &str) -> Option<f64> {
    let (x, y) = (a.count(term), b.count(term));
    (y > 0).then(|| x as f64 / y as f64)
}

/// Relative frequency of `term` in `a` over `b`, normalized by token counts.
pub fn frequency_ratio(a: &NgramCounts, b: &NgramCounts, term: &str) -> Option<f64> {
    let fb = b.frequency(term);
    (fb > 0.0).then(|| a.frequency(term) / fb)
}

/// Manufacturer decision rationales of every run, keyed by competition bin.
pub fn manufacturer_rationales(trajectories: &[Trajectory]) -> Result<Vec<(CompetitionBin, &str)>, UnbinnableN> {
    let mut out = Vec::new();
    for t in trajectories {
        let bin = CompetitionBin::of(t.n_manufacturers())?;
        for r in &t.records {
            for d in &r.decisions {
                if matches!(d.role, Role::Manufacturer { .. }) {
                    out.push((bin, d.decision.rationale()));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins() {
        assert_eq!(CompetitionBin::of(2), Ok(CompetitionBin::Two));
        assert_eq!(CompetitionBin::of(5).unwrap().label(), "(3,5]");
        assert_eq!(CompetitionBin::of(6), Ok(CompetitionBin::SixToTen));
        assert_eq!(CompetitionBin::of(11), Err(UnbinnableN(11)));
        assert_eq!(CompetitionBin::of(1), Err(UnbinnableN(1)));
        assert_eq!(serde_json::to_string(&CompetitionBin::FourToFive).unwrap(), "\"(3,5]\"");
    }

    #[test]
    fn ngrams_of_one_rationale() {
        let mut c = NgramCounts::default();
        c.add("Maintaining market-share!");
        assert_eq!(c.unigrams.keys().collect::<Vec<_>>(), ["maintaining", "market", "share"]);
        assert_eq!(c.bigrams.keys().collect::<Vec<_>>(), ["maintaining market", "market share"]);
        let mut e = NgramCounts::default();
        e.add("");
        assert_eq!((e.documents, e.tokens, e.unigrams.len()), (1, 0, 0));
    }

    #[test]
    fn ratios_between_bins() {
        let t = rationale_ngrams([
            ("high", "maintaining share"),
            ("high", "maintaining output"),
            ("high", "maintaining margins"),
            ("low", "maintaining capacity"),
            ("low", "maintaining output, expanding"),
        ]);
        assert_eq!(count_ratio(&t["high"], &t["low"], "maintaining"), Some(1.5));
        assert_eq!(count_ratio(&t["high"], &t["low"], "margins"), None);
        // 3/6 against 2/5.
        assert!((frequency_ratio(&t["high"], &t["low"], "maintaining").unwrap() - 1.25).abs() < 1e-12);
        assert_eq!(t["low"].count("maintaining output"), 1);
    }
}
