//! The quarterly timeline: scenario set-up, seeded disruptions, agent decisions,
//! clearing and the trajectory log.

mod rng;
mod scenario;
mod simulation;
mod state;
mod trajectory;

pub use rng::manufacturer_stream;
pub use scenario::{scenario_from_gt, GtUnusable};
pub use simulation::{run_replications, run_simulation, EngineError, EngineOptions, Policies, Simulation, Stage};
pub use state::MarketState;
pub use trajectory::{
    header_path_for, read_dir, BaselineNotes, DecisionEntry, PeriodCosts, PolicyIds, RunLabel, Trajectory,
    TrajectoryHeader, TrajectoryRecord,
};
