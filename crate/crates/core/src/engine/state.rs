use serde::{Deserialize, Serialize};

use crate::agents::FdaSignal;
use crate::market::{BuyerState, ClearingOutcome, ManufacturerState, SimConfig};

/// The whole world at one point of the quarterly timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    /// Quarter currently being played, 1-based; 0 before the first quarter starts.
    pub period: u32,
    pub horizon: u32,
    pub manufacturers: Vec<ManufacturerState>,
    pub buyer: BuyerState,
    /// Most recent announcement, from this or any earlier quarter.
    pub last_signal: Option<FdaSignal>,
    pub signal_history: Vec<FdaSignal>,
    pub last_outcome: Option<ClearingOutcome>,
    /// Manufacturers whose disruption started this quarter.
    pub new_disruptions: Vec<usize>,
}

impl MarketState {
    pub fn initial(cfg: &SimConfig) -> Self {
        let base = cfg.base_capacity();
        Self {
            period: 0,
            horizon: cfg.horizon,
            manufacturers: (0..cfg.n_manufacturers).map(|i| ManufacturerState::new(i, base)).collect(),
            buyer: BuyerState::default(),
            last_signal: None,
            signal_history: Vec::new(),
            last_outcome: None,
            new_disruptions: Vec::new(),
        }
    }

    pub fn disrupted_ids(&self) -> Vec<usize> {
        self.manufacturers.iter().filter(|m| m.is_disrupted()).map(|m| m.id).collect()
    }

    /// The announcement issued in the current quarter, if any.
    pub fn current_signal(&self) -> Option<&FdaSignal> {
        self.last_signal.as_ref().filter(|s| s.period == self.period)
    }
}
