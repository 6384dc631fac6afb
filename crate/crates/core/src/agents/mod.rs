//! Decision agents. Every backend goes through the same two stages, analyze then
//! decide, over a context that holds only what the role is allowed to see.

mod context;
mod llm;
mod policy;
mod rule;
mod scripted;
mod types;
mod validate;

pub use context::{build_context, RoleContext};
pub use llm::LlmPolicy;
pub use policy::{Decided, Policy, PolicyError};
pub use rule::{announcement_text, risk_from_ratio, RulePolicy, HIGH_ALERT_RATIO, HIGH_RISK_RATIO};
pub use scripted::{Script, ScriptStep, ScriptedPolicy};
pub use types::{
    Assessment, BuyerDecision, Confidence, Decision, FdaDecision, FdaSignal, ManufacturerDecision, RiskLevel, Role,
    Severity, Trend, Urgency,
};
pub use validate::{validate_assessment, validate_decision, ValidationFailed};
