//! Turns a raw structured document into a legal decision. Missing keys and illegal
//! enum values are rejected; numbers outside the legal set are clamped and flagged.

use serde::de::DeserializeOwned;
use serde_json::Value;
use thiserror::Error;

use super::policy::Decided;
use super::types::{
    Assessment, BuyerDecision, Confidence, Decision, FdaDecision, ManufacturerDecision, RiskLevel, Role, Severity,
    Trend, Urgency,
};
use crate::market::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("validation failed for keys {0:?}")]
pub struct ValidationFailed(pub Vec<String>);

struct Fields<'a> {
    doc: &'a Value,
    bad: Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(doc: &'a Value) -> Self {
        Self { doc, bad: Vec::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.doc.get(key);
        if v.is_none() {
            self.bad.push(key.to_owned());
        }
        v
    }

    fn number(&mut self, key: &str) -> f64 {
        match self.raw(key).map(|v| v.as_f64().filter(|x| x.is_finite())) {
            Some(Some(x)) => x,
            Some(None) => {
                self.bad.push(key.to_owned());
                0.0
            }
            None => 0.0,
        }
    }

    fn text(&mut self, key: &str) -> String {
        match self.raw(key).map(Value::as_str) {
            Some(Some(s)) => s.to_owned(),
            Some(None) => {
                self.bad.push(key.to_owned());
                String::new()
            }
            None => String::new(),
        }
    }

    fn flag(&mut self, key: &str) -> bool {
        match self.raw(key).map(Value::as_bool) {
            Some(Some(b)) => b,
            Some(None) => {
                self.bad.push(key.to_owned());
                false
            }
            None => false,
        }
    }

    fn enumeration<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.raw(key)?;
        let parsed = serde_json::from_value(v.clone()).ok();
        if parsed.is_none() {
            self.bad.push(key.to_owned());
        }
        parsed
    }

    fn finish<T>(self, value: Option<T>) -> Result<T, ValidationFailed> {
        match value {
            Some(v) if self.bad.is_empty() => Ok(v),
            _ => Err(ValidationFailed(self.bad)),
        }
    }
}

/// Checks `raw` against the decision contract for `role`.
pub fn validate_decision(raw: &Value, role: Role, cfg: &SimConfig) -> Result<Decided, ValidationFailed> {
    if !raw.is_object() {
        return Err(ValidationFailed(vec!["<document>".into()]));
    }
    let mut f = Fields::new(raw);
    let mut flags = Vec::new();
    let decision = match role {
        Role::Manufacturer { .. } => {
            let wanted = f.number("invest_fraction");
            let confidence = f.enumeration::<Confidence>("confidence");
            let rationale = f.text("rationale");
            let invest_fraction = cfg.nearest_investment_option(wanted);
            if invest_fraction != wanted {
                flags.push(format!("invest_fraction {wanted} clamped to {invest_fraction}"));
            }
            confidence.map(|confidence| Decision::Manufacturer(ManufacturerDecision { invest_fraction, confidence, rationale }))
        }
        Role::Buyer => {
            let wanted = f.number("order_quantity");
            let confidence = f.enumeration::<Confidence>("confidence");
            let rationale = f.text("rationale");
            let (lo, hi) = cfg.order_bounds_units();
            let order_quantity = wanted.clamp(lo, hi);
            if order_quantity != wanted {
                flags.push(format!("order_quantity {wanted} clamped to {order_quantity}"));
            }
            confidence.map(|confidence| Decision::Buyer(BuyerDecision { order_quantity, confidence, rationale }))
        }
        Role::Fda => {
            let announce = f.flag("announce");
            let severity = f.enumeration::<Severity>("severity");
            let text = f.text("text");
            let rationale = f.text("rationale");
            severity.map(|severity| {
                let mut d = FdaDecision { announce, severity, text, rationale };
                if d.normalize() {
                    flags.push("inconsistent announcement normalized to silence".to_owned());
                }
                Decision::Fda(d)
            })
        }
    };
    Ok(Decided { decision: f.finish(decision)?, flags })
}

/// Checks an analyze-stage document and tags it with `role`.
pub fn validate_assessment(raw: &Value, role: Role) -> Result<Assessment, ValidationFailed> {
    if !raw.is_object() {
        return Err(ValidationFailed(vec!["<document>".into()]));
    }
    let mut f = Fields::new(raw);
    let risk = f.enumeration::<RiskLevel>("shortage_risk");
    let trend = f.enumeration::<Trend>("demand_trend");
    let urgency = f.enumeration::<Urgency>("urgency");
    let summary = f.text("summary");
    let value = match (risk, trend, urgency) {
        (Some(shortage_risk), Some(demand_trend), Some(urgency)) => {
            Some(Assessment { role, shortage_risk, demand_trend, urgency, summary })
        }
        _ => None,
    };
    f.finish(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn missing_confidence_is_reported() {
        let cfg = SimConfig::default();
        let err = validate_decision(&json!({"invest_fraction": 0.1, "rationale": "x"}), Role::Manufacturer { id: 0 }, &cfg)
            .unwrap_err();
        assert_eq!(err.0, vec!["confidence".to_owned()]);
    }

    #[test]
    fn invest_fraction_clamps_to_nearest_option() {
        let cfg = SimConfig::default();
        let d = validate_decision(
            &json!({"invest_fraction": 0.35, "confidence": "high", "rationale": "x"}),
            Role::Manufacturer { id: 0 },
            &cfg,
        )
        .unwrap();
        let Decision::Manufacturer(m) = &d.decision else { panic!() };
        assert_eq!(m.invest_fraction, 0.3);
        assert_eq!(d.flags.len(), 1);
    }

    #[test]
    fn valid_doc_passes_unchanged() {
        let cfg = SimConfig::default();
        let raw = json!({"order_quantity": 1.1, "confidence": "moderate", "rationale": "hedge"});
        let d = validate_decision(&raw, Role::Buyer, &cfg).unwrap();
        assert!(d.flags.is_empty());
        assert_eq!(
            d.decision,
            Decision::Buyer(BuyerDecision { order_quantity: 1.1, confidence: Confidence::Moderate, rationale: "hedge".into() })
        );
    }

    #[test]
    fn order_beyond_bounds_is_clamped() {
        let cfg = SimConfig::default();
        let raw = json!({"order_quantity": 3.5, "confidence": "low", "rationale": ""});
        let d = validate_decision(&raw, Role::Buyer, &cfg).unwrap();
        let Decision::Buyer(b) = d.decision else { panic!() };
        assert_eq!(b.order_quantity, 2.0);
        let raw = json!({"order_quantity": -1, "confidence": "low", "rationale": ""});
        let Decision::Buyer(b) = validate_decision(&raw, Role::Buyer, &cfg).unwrap().decision else { panic!() };
        assert_eq!(b.order_quantity, 0.0);
    }

    #[test]
    fn illegal_enums_are_reported() {
        let cfg = SimConfig::default();
        let raw = json!({"announce": true, "severity": "critical", "text": "t", "rationale": "r"});
        assert_eq!(validate_decision(&raw, Role::Fda, &cfg).unwrap_err().0, vec!["severity".to_owned()]);
        let raw = json!({"announce": "yes", "severity": "none", "rationale": "r"});
        let mut keys = validate_decision(&raw, Role::Fda, &cfg).unwrap_err().0;
        keys.sort();
        assert_eq!(keys, vec!["announce".to_owned(), "text".to_owned()]);
    }

    #[test]
    fn fda_inconsistency_is_normalized() {
        let cfg = SimConfig::default();
        let raw = json!({"announce": false, "severity": "elevated", "text": "t", "rationale": "r"});
        let d = validate_decision(&raw, Role::Fda, &cfg).unwrap();
        assert_eq!(d.decision, Decision::Fda(FdaDecision::silent("r")));
        assert_eq!(d.flags.len(), 1);
    }

    #[test]
    fn assessment_round_trip() {
        let raw = json!({"shortage_risk": "high", "demand_trend": "rising", "urgency": "high", "summary": "tight"});
        let a = validate_assessment(&raw, Role::Buyer).unwrap();
        assert_eq!(a.shortage_risk, RiskLevel::High);
        let raw = json!({"shortage_risk": "severe", "demand_trend": "rising", "summary": "tight"});
        let mut keys = validate_assessment(&raw, Role::Buyer).unwrap_err().0;
        keys.sort();
        assert_eq!(keys, vec!["shortage_risk".to_owned(), "urgency".to_owned()]);
    }
}
