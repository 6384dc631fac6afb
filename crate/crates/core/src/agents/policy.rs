use thiserror::Error;

use super::context::RoleContext;
use super::types::{Assessment, Decision};
use crate::market::SimConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    /// The backend could not produce an answer; the engine may fall back to rules.
    #[error("policy unavailable: {0}")]
    Unavailable(String),
}

/// A decision plus any notes about how it was repaired on the way in.
#[derive(Debug, Clone, PartialEq)]
pub struct Decided {
    pub decision: Decision,
    pub flags: Vec<String>,
}

impl Decided {
    pub fn clean(decision: Decision) -> Self {
        Self { decision, flags: Vec::new() }
    }
}

/// A decision backend for one agent: analyze the context, then decide.
pub trait Policy: Send {
    /// Short backend tag written to the trajectory, e.g. "rule".
    fn backend(&self) -> &str;

    fn analyze(&mut self, ctx: &RoleContext) -> Result<Assessment, PolicyError>;

    fn decide(&mut self, assessment: &Assessment, ctx: &RoleContext, cfg: &SimConfig) -> Result<Decided, PolicyError>;

    /// Whether calls are slow enough (remote) that agents should run on separate threads.
    fn prefers_parallel(&self) -> bool {
        false
    }
}
