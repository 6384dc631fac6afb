//! Replay backend: returns recorded answers period by period. The script is shared,
//! so an interactive caller can append the next step while a simulation holds the policy.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::context::RoleContext;
use super::policy::{Decided, Policy, PolicyError};
use super::rule::RulePolicy;
use super::types::{Assessment, Decision};
use crate::market::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    /// Recorded assessment; when absent the rule reading of the context is used.
    #[serde(default)]
    pub assessment: Option<Assessment>,
    pub decision: Decision,
}

/// Shared handle to a script keyed by period.
#[derive(Debug, Clone, Default)]
pub struct Script(Arc<Mutex<BTreeMap<u32, ScriptStep>>>);

impl Script {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: impl IntoIterator<Item = (u32, ScriptStep)>) -> Self {
        Self(Arc::new(Mutex::new(steps.into_iter().collect())))
    }

    pub fn push(&self, period: u32, step: ScriptStep) {
        self.0.lock().expect("script lock").insert(period, step);
    }

    pub fn contains(&self, period: u32) -> bool {
        self.0.lock().expect("script lock").contains_key(&period)
    }

    pub fn get(&self, period: u32) -> Option<ScriptStep> {
        self.0.lock().expect("script lock").get(&period).cloned()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("script lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    script: Script,
}

impl ScriptedPolicy {
    pub fn new(script: Script) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    fn step(&self, period: u32) -> Result<ScriptStep, PolicyError> {
        self.script.get(period).ok_or_else(|| PolicyError::Unavailable(format!("script has no step for period {period}")))
    }
}

impl Policy for ScriptedPolicy {
    fn backend(&self) -> &str {
        "scripted"
    }

    fn analyze(&mut self, ctx: &RoleContext) -> Result<Assessment, PolicyError> {
        let step = self.step(ctx.period)?;
        Ok(step.assessment.unwrap_or_else(|| RulePolicy::assess(ctx)))
    }

    fn decide(&mut self, _: &Assessment, ctx: &RoleContext, _: &SimConfig) -> Result<Decided, PolicyError> {
        let step = self.step(ctx.period)?;
        if !step.decision.fits(&ctx.role) {
            return Err(PolicyError::Unavailable(format!(
                "scripted decision for period {} does not belong to {}",
                ctx.period, ctx.role
            )));
        }
        Ok(Decided::clean(step.decision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::context::build_context;
    use crate::agents::types::{BuyerDecision, Confidence, RiskLevel, Role, Trend, Urgency};
    use crate::engine::MarketState;

    fn buyer_step(order: f64) -> ScriptStep {
        ScriptStep {
            assessment: Some(Assessment {
                role: Role::Buyer,
                shortage_risk: RiskLevel::Moderate,
                demand_trend: Trend::Rising,
                urgency: Urgency::Elevated,
                summary: "recorded".into(),
            }),
            decision: Decision::Buyer(BuyerDecision { order_quantity: order, confidence: Confidence::Low, rationale: "r".into() }),
        }
    }

    #[test]
    fn replays_recorded_assessment_and_decision() {
        let cfg = SimConfig::default();
        let mut w = MarketState::initial(&cfg);
        w.period = 1;
        let script = Script::from_steps([(1, buyer_step(1.25))]);
        let mut p = ScriptedPolicy::new(script.clone());
        let ctx = build_context(Role::Buyer, &w, &cfg);
        let a = p.analyze(&ctx).unwrap();
        assert_eq!(a, script.get(1).unwrap().assessment.unwrap());
        let d = p.decide(&a, &ctx, &cfg).unwrap();
        assert_eq!(d.decision, buyer_step(1.25).decision);

        w.period = 2;
        let ctx = build_context(Role::Buyer, &w, &cfg);
        assert!(p.analyze(&ctx).is_err());
        script.push(2, buyer_step(0.5));
        assert!(p.analyze(&ctx).is_ok());
    }

    #[test]
    fn wrong_role_is_rejected() {
        let cfg = SimConfig::default();
        let mut w = MarketState::initial(&cfg);
        w.period = 1;
        let mut p = ScriptedPolicy::new(Script::from_steps([(1, buyer_step(1.0))]));
        let ctx = build_context(Role::Fda, &w, &cfg);
        let a = p.analyze(&ctx).unwrap();
        assert!(p.decide(&a, &ctx, &cfg).is_err());
    }
}
