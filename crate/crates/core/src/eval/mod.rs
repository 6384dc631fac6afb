//! Metrics against ground truth (FIP, RLP), the zero-shot baseline and the
//! competition and rationale analyses.

mod analysis;
mod baseline;
mod metrics;
mod report;

pub use analysis::{
    avg_supply_per_period, competition_bins, count_ratio, frequency_ratio, manufacturer_rationales, rationale_ngrams,
    tokenize, BinSummary, CompetitionBin, NgramCounts, UnbinnableN,
};
pub use baseline::{baseline_variables, zero_shot_run, BaselineError};
pub use metrics::{
    fip, resolution_time, rlp, trajectory_fip, trajectory_resolution_time, BadEpsilon, EpsilonPolicy, DEFAULT_EPSILON,
};
pub use report::{evaluate, plot_csv, CaseMetrics, DatasetMetrics, MetricReport, PairingError, AGGREGATION};
