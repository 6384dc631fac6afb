use thiserror::Error;

use crate::dataset::{GtDataset, GtTrajectory, NR_DISRUPTION_MAGNITUDE, NR_DISRUPTION_PROB};
use crate::market::{Scenario, SimConfig, MAX_HORIZON, MIN_HORIZON};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ground-truth case {case_id} cannot be simulated: {reason}")]
pub struct GtUnusable {
    pub case_id: String,
    pub reason: String,
}

/// Simulation settings for a curated case, on top of `base` (prices, options, seed).
///
/// FDA-Disc cases start with every manufacturer that lost packages disrupted for the
/// whole horizon; the largest share goes to manufacturer 0. FDA-NR cases draw
/// disruptions at the reference probability and magnitude.
pub fn scenario_from_gt(gt: &GtTrajectory, base: &SimConfig) -> Result<SimConfig, GtUnusable> {
    let unusable = |reason: &str| GtUnusable { case_id: gt.case_id.clone(), reason: reason.to_owned() };
    if gt.n_manufacturers < 2 {
        return Err(unusable("monopoly"));
    }
    if gt.horizon > MAX_HORIZON {
        return Err(unusable(&format!("T>{MAX_HORIZON}")));
    }
    if gt.horizon < MIN_HORIZON {
        return Err(unusable(&format!("T<{MIN_HORIZON}")));
    }
    if !gt.resolved {
        return Err(unusable("unresolved"));
    }
    let mut cfg = SimConfig { n_manufacturers: gt.n_manufacturers, horizon: gt.horizon, ..base.clone() };
    match gt.dataset {
        GtDataset::FdaDisc => {
            let mut magnitudes = gt.per_mfr_delta.clone();
            magnitudes.sort_by(|a, b| b.total_cmp(a));
            magnitudes.truncate(gt.n_manufacturers);
            cfg.disruption_prob = 0.0;
            cfg.scenario = Scenario::ForcedDisc { magnitudes, duration: gt.horizon, background_prob: 0.0 };
        }
        GtDataset::FdaNr => {
            cfg.disruption_prob = NR_DISRUPTION_PROB;
            cfg.disruption_magnitude = NR_DISRUPTION_MAGNITUDE;
            cfg.scenario = Scenario::StochasticNr;
        }
    }
    Ok(cfg)
}
