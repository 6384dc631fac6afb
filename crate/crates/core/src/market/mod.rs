//! Deterministic market mechanics: capacity, disruptions, demand allocation and
//! the buyer's and manufacturers' books. Nothing here draws random numbers or
//! talks to an agent.

mod accounting;
mod clearing;
mod config;
mod state;

pub use accounting::{buyer_accounting, manufacturer_accounting, BuyerAccounting};
pub use clearing::{allocate, ClearingOutcome};
pub use config::{ConfigError, RecoveryDist, Scenario, SimConfig, MAX_HORIZON, MIN_HORIZON};
pub use state::{
    mature_investments, tick_disruptions, AllocationEntry, BuyerState, Disruption, ManufacturerState,
    PendingInvestment, PurchaseEntry,
};
