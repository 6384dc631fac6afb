use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Trajectory;

pub const DEFAULT_EPSILON: f64 = 0.001;

/// Shortage at or below `epsilon` counts as cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy {
    epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("shortage tolerance must be a positive number, got {0}")]
pub struct BadEpsilon(pub f64);

impl EpsilonPolicy {
    pub fn new(epsilon: f64) -> Result<Self, BadEpsilon> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Self { epsilon })
        } else {
            Err(BadEpsilon(epsilon))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON }
    }
}

/// Percentage of periods with an announcement. An empty series scores 0.
pub fn fip(interventions: &[bool]) -> f64 {
    if interventions.is_empty() {
        return 0.0;
    }
    100.0 * interventions.iter().filter(|i| **i).count() as f64 / interventions.len() as f64
}

pub fn trajectory_fip(t: &Trajectory) -> f64 {
    let flags: Vec<bool> = t.records.iter().map(|r| r.intervened()).collect();
    fip(&flags)
}

/// Earliest 1-based period from which every shortage stays within tolerance;
/// `T + 1` when the series never clears for good.
pub fn resolution_time(shortages: &[f64], eps: EpsilonPolicy) -> u32 {
    let cleared_tail = shortages.iter().rev().take_while(|s| **s <= eps.epsilon).count();
    (shortages.len() - cleared_tail) as u32 + 1
}

pub fn trajectory_resolution_time(t: &Trajectory, eps: EpsilonPolicy) -> u32 {
    resolution_time(&t.shortages(), eps)
}

/// Signed lag in percent of the reference time; positive means slower.
pub fn rlp(t_sim: f64, t_gt: u32) -> f64 {
    debug_assert!(t_gt >= 1);
    100.0 * (t_sim - f64::from(t_gt)) / f64::from(t_gt)
}
