pub mod agents;
pub mod dataset;
pub mod engine;
pub mod eval;
pub mod gateway;
pub mod market;
