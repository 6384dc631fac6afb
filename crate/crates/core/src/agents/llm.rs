use std::collections::BTreeMap;
use std::sync::Arc;

use super::context::RoleContext;
use super::policy::{Decided, Policy, PolicyError};
use super::types::{Assessment, Role};
use super::validate::{validate_assessment, validate_decision};
use crate::gateway::{self, CompletionRequest, Gateway, TemplateStore};
use crate::market::SimConfig;

/// Language-model backend: renders the role's templates, asks the gateway for a
/// schema-valid document and validates it into an assessment or a decision.
pub struct LlmPolicy {
    gateway: Arc<Gateway>,
    templates: Arc<TemplateStore>,
    backend: String,
}

impl LlmPolicy {
    pub fn new(gateway: Arc<Gateway>, templates: Arc<TemplateStore>) -> Self {
        let backend = format!("llm:{}", gateway.config().model);
        Self { gateway, templates, backend }
    }

    /// Bindings every stage can use; all of them come from the role context.
    fn context_variables(ctx: &RoleContext) -> BTreeMap<String, String> {
        let mut vars = BTreeMap::new();
        let scalar = |key: &str| ctx.get(key).map(|v| v.to_string()).unwrap_or_default();
        vars.insert("period".into(), ctx.period.to_string());
        vars.insert("horizon".into(), scalar("horizon"));
        vars.insert("num_manufacturers".into(), scalar("num_manufacturers"));
        if let Role::Manufacturer { id } = ctx.role {
            vars.insert("manufacturer_id".into(), id.to_string());
        }
        vars.insert("context_json".into(), ctx.entries_pretty());
        let fda_text = match ctx.str("fda_current_text").filter(|t| !t.is_empty()) {
            Some(t) => format!("[{}] {t}", ctx.severity().as_str()),
            None => "No FDA announcement this quarter.".to_owned(),
        };
        vars.insert("fda_text".into(), fda_text);
        vars
    }

    fn decision_variables(ctx: &RoleContext, cfg: &SimConfig, assessment: &Assessment) -> BTreeMap<String, String> {
        let mut vars = Self::context_variables(ctx);
        let options: Vec<String> = cfg.investment_options.iter().map(f64::to_string).collect();
        let (lo, hi) = cfg.order_bounds_units();
        for (k, v) in [
            ("profit_margin", cfg.profit_margin.to_string()),
            ("invest_cost", cfg.invest_cost.to_string()),
            ("investment_options", options.join(", ")),
            ("price", cfg.price.to_string()),
            ("penalty", cfg.penalty.to_string()),
            ("holding_cost", cfg.holding_cost.to_string()),
            ("patient_demand", cfg.patient_demand.to_string()),
            ("order_min", lo.to_string()),
            ("order_max", hi.to_string()),
            ("assessment_json", serde_json::to_string_pretty(assessment).expect("assessment serializes")),
        ] {
            vars.insert(k.to_owned(), v);
        }
        vars
    }

    fn ask(&self, role: Role, stage: &str, vars: &BTreeMap<String, String>, schema: serde_json::Value, period: u32) -> Result<serde_json::Value, PolicyError> {
        let unavailable = |e: &dyn std::fmt::Display| PolicyError::Unavailable(e.to_string());
        let system_prompt = self.templates.render(&format!("{}_system", role.stem()), vars).map_err(|e| unavailable(&e))?;
        let user_prompt = self.templates.render(&format!("{}_{stage}", role.stem()), vars).map_err(|e| unavailable(&e))?;
        let req = CompletionRequest {
            system_prompt,
            user_prompt,
            schema,
            temperature: None,
            label: format!("{role}/{stage}/p{period}"),
        };
        self.gateway.complete_structured(&req).map(|r| r.doc).map_err(|e| unavailable(&e))
    }
}

impl Policy for LlmPolicy {
    fn backend(&self) -> &str {
        &self.backend
    }

    fn analyze(&mut self, ctx: &RoleContext) -> Result<Assessment, PolicyError> {
        let vars = Self::context_variables(ctx);
        let doc = self.ask(ctx.role, "analyze", &vars, gateway::assessment_schema(), ctx.period)?;
        validate_assessment(&doc, ctx.role).map_err(|e| PolicyError::Unavailable(e.to_string()))
    }

    fn decide(&mut self, assessment: &Assessment, ctx: &RoleContext, cfg: &SimConfig) -> Result<Decided, PolicyError> {
        let vars = Self::decision_variables(ctx, cfg, assessment);
        let schema = match ctx.role {
            Role::Manufacturer { .. } => gateway::manufacturer_decision_schema(),
            Role::Buyer => gateway::buyer_decision_schema(),
            Role::Fda => gateway::fda_decision_schema(),
        };
        let doc = self.ask(ctx.role, "decide", &vars, schema, ctx.period)?;
        validate_decision(&doc, ctx.role, cfg).map_err(|e| PolicyError::Unavailable(e.to_string()))
    }

    fn prefers_parallel(&self) -> bool {
        true
    }
}
