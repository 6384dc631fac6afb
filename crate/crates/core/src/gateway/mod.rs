//! Provider-agnostic structured completions: prompt templates, schema checks,
//! retry with exponential backoff, an audit trail and a scripted mock provider.
//! The HTTP transport itself lives with the binaries; this module only builds and
//! parses the provider payloads.

mod audit;
mod client;
mod mock;
pub mod schema;
mod template;
mod transport;

pub use audit::{AuditLog, AuditRecord, CallStatus};
pub use client::{
    backoff_delay, extract_json, CompletionRequest, Gateway, GatewayError, RecordingSleeper, Sleeper,
    StructuredReply, ThreadSleeper,
};
pub use mock::{MockReply, MockTransport, Unreachable};
pub use template::{render_str, TemplateError, TemplateStore};
pub use transport::{
    build_http_call, parse_http_response, ChatRequest, ChatResponse, HttpCall, ProviderConfig, ProviderKind,
    Transport, TransportFailure,
};

use serde_json::Value;

fn builtin_schema(text: &str) -> Value {
    serde_json::from_str(text).expect("bundled schema is valid JSON")
}

pub fn assessment_schema() -> Value {
    builtin_schema(include_str!("../../schemas/assessment.schema.json"))
}

pub fn manufacturer_decision_schema() -> Value {
    builtin_schema(include_str!("../../schemas/manufacturer_decision.schema.json"))
}

pub fn buyer_decision_schema() -> Value {
    builtin_schema(include_str!("../../schemas/buyer_decision.schema.json"))
}

pub fn fda_decision_schema() -> Value {
    builtin_schema(include_str!("../../schemas/fda_decision.schema.json"))
}

/// Baseline trajectory schema pinned to exactly `horizon` periods.
pub fn zero_shot_schema(horizon: u32) -> Value {
    let mut schema = builtin_schema(include_str!("../../schemas/zero_shot.schema.json"));
    let periods = &mut schema["properties"]["periods"];
    periods["minItems"] = horizon.into();
    periods["maxItems"] = horizon.into();
    periods["items"]["properties"]["period"]["maximum"] = horizon.into();
    schema
}
