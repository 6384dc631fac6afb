//! Deterministic threshold policies. They read nothing but the role context, so
//! they respect the same information limits as any other backend.
//!
//! | role         | rule                                                                    |
//! |--------------|-------------------------------------------------------------------------|
//! | risk         | high if shortage/demand >= 0.05, moderate if > 0, else low              |
//! | manufacturer | 0.30 if severity >= elevated and fully allocated, 0.10 if monitoring    |
//! | buyer        | 1.3 D0 under high risk, 1.1 D0 under moderate, else 1.0 D0              |
//! | FDA          | high_alert if shortage/demand >= 0.2, elevated if > 0, monitoring if any disruption is reported |

use super::context::RoleContext;
use super::policy::{Decided, Policy, PolicyError};
use super::types::{
    Assessment, BuyerDecision, Confidence, Decision, FdaDecision, ManufacturerDecision, RiskLevel, Role, Severity,
    Trend, Urgency,
};
use crate::market::SimConfig;

pub const HIGH_RISK_RATIO: f64 = 0.05;
pub const HIGH_ALERT_RATIO: f64 = 0.20;
const TREND_EPS: f64 = 1e-9;

#[derive(Debug, Default, Clone, Copy)]
pub struct RulePolicy;

pub fn risk_from_ratio(ratio: f64) -> RiskLevel {
    if ratio >= HIGH_RISK_RATIO {
        RiskLevel::High
    } else if ratio > 0.0 {
        RiskLevel::Moderate
    } else {
        RiskLevel::Low
    }
}

fn shortage_ratio(ctx: &RoleContext) -> f64 {
    let shortage = ctx.f64("last_shortage").unwrap_or(0.0);
    let demand = ctx.f64("last_demand").unwrap_or(0.0);
    if shortage <= 0.0 {
        0.0
    } else if demand > 0.0 {
        shortage / demand
    } else {
        1.0
    }
}

fn trend(values: &[f64]) -> Trend {
    match values {
        [.., prev, last] if *last > prev + TREND_EPS => Trend::Rising,
        [.., prev, last] if *last < prev - TREND_EPS => Trend::Falling,
        _ => Trend::Stable,
    }
}

fn series(ctx: &RoleContext, key: &str, field: &str) -> Vec<f64> {
    ctx.get(key)
        .and_then(|v| v.as_array())
        .map(|items| items.iter().filter_map(|i| i.get(field).and_then(|x| x.as_f64())).collect())
        .unwrap_or_default()
}

fn severity_floor(severity: Severity) -> RiskLevel {
    match severity {
        Severity::HighAlert => RiskLevel::High,
        Severity::Elevated => RiskLevel::Moderate,
        _ => RiskLevel::Low,
    }
}

fn risk_word(r: RiskLevel) -> &'static str {
    match r {
        RiskLevel::Low => "low",
        RiskLevel::Moderate => "moderate",
        RiskLevel::High => "high",
    }
}

impl RulePolicy {
    pub fn assess(ctx: &RoleContext) -> Assessment {
        let severity = ctx.severity();
        let (risk, demand_trend, urgency, summary) = match ctx.role {
            Role::Manufacturer { .. } => {
                let own_disrupted = ctx.get("own_disrupted").and_then(|v| v.as_bool()).unwrap_or(false);
                let risk = match severity {
                    Severity::HighAlert | Severity::Elevated => RiskLevel::High,
                    Severity::Monitoring => RiskLevel::Moderate,
                    Severity::None if own_disrupted => RiskLevel::Moderate,
                    Severity::None => RiskLevel::Low,
                };
                let allocated = series(ctx, "own_allocated_demand_history", "allocated");
                let summary = format!(
                    "FDA severity {}, own plant {}.",
                    severity.as_str(),
                    if own_disrupted { "disrupted" } else { "running normally" }
                );
                (risk, trend(&allocated), severity.urgency(), summary)
            }
            Role::Buyer => {
                let ratio = shortage_ratio(ctx);
                let risk = risk_from_ratio(ratio).max(severity_floor(severity));
                let received = series(ctx, "purchase_history", "received");
                let summary = format!(
                    "Last quarter shortfall {:.1}% of the order, FDA severity {}.",
                    ratio * 100.0,
                    severity.as_str()
                );
                (risk, trend(&received), severity.urgency(), summary)
            }
            Role::Fda => {
                let ratio = shortage_ratio(ctx);
                let reported = ctx.f64("disruption_count").unwrap_or(0.0) > 0.0;
                let mut risk = risk_from_ratio(ratio);
                if risk == RiskLevel::Low && reported {
                    risk = RiskLevel::Moderate;
                }
                let urgency = if ratio >= HIGH_ALERT_RATIO {
                    Urgency::High
                } else if ratio > 0.0 {
                    Urgency::Elevated
                } else {
                    Urgency::Routine
                };
                let summary = format!(
                    "Shortage {:.1}% of demand, {} disruption report(s).",
                    ratio * 100.0,
                    ctx.f64("disruption_count").unwrap_or(0.0)
                );
                (risk, Trend::Stable, urgency, summary)
            }
        };
        Assessment { role: ctx.role, shortage_risk: risk, demand_trend, urgency, summary }
    }

    pub fn choose(assessment: &Assessment, ctx: &RoleContext, cfg: &SimConfig) -> Decision {
        match ctx.role {
            Role::Manufacturer { .. } => {
                let severity = ctx.severity();
                // No history yet means the market is still at its initial equilibrium,
                // where every plant runs at full allocation.
                let utilization = ctx.f64("own_last_utilization").unwrap_or(1.0);
                let fully_allocated = utilization >= 1.0 - 1e-9;
                let (wanted, confidence) = if severity >= Severity::Elevated && fully_allocated {
                    (0.30, Confidence::High)
                } else if severity == Severity::Monitoring {
                    (0.10, Confidence::Moderate)
                } else {
                    (0.0, Confidence::Moderate)
                };
                let fraction = cfg.nearest_investment_option(wanted);
                let quoted = ctx.str("fda_current_text").filter(|t| !t.is_empty());
                let mut rationale = match quoted {
                    Some(text) => format!("FDA {} announcement: \"{text}\". ", severity.as_str()),
                    None => "No FDA announcement this quarter. ".to_owned(),
                };
                rationale.push_str(&format!(
                    "Last allocation used {:.0}% of capacity; expanding by {:.0}% of base capacity.",
                    utilization * 100.0,
                    fraction * 100.0
                ));
                Decision::Manufacturer(ManufacturerDecision { invest_fraction: fraction, confidence, rationale })
            }
            Role::Buyer => {
                let multiple = match assessment.shortage_risk {
                    RiskLevel::High => 1.3,
                    RiskLevel::Moderate => 1.1,
                    RiskLevel::Low => 1.0,
                };
                let (lo, hi) = cfg.order_bounds_units();
                let order = (multiple * cfg.patient_demand).clamp(lo, hi);
                let confidence = if assessment.shortage_risk == RiskLevel::Low { Confidence::High } else { Confidence::Moderate };
                let rationale = format!(
                    "Shortage risk {} with FDA severity {}; ordering {:.2} units against patient need of {:.2}.",
                    risk_word(assessment.shortage_risk),
                    ctx.severity().as_str(),
                    order,
                    cfg.patient_demand
                );
                Decision::Buyer(BuyerDecision { order_quantity: order, confidence, rationale })
            }
            Role::Fda => {
                let ratio = shortage_ratio(ctx);
                let reported = ctx.f64("disruption_count").unwrap_or(0.0) > 0.0;
                let severity = if ratio >= HIGH_ALERT_RATIO {
                    Severity::HighAlert
                } else if ratio > 0.0 {
                    Severity::Elevated
                } else if reported {
                    Severity::Monitoring
                } else {
                    Severity::None
                };
                let rationale = format!(
                    "Shortage at {:.1}% of demand with {} active disruption report(s).",
                    ratio * 100.0,
                    ctx.f64("disruption_count").unwrap_or(0.0)
                );
                Decision::Fda(match severity {
                    Severity::None => FdaDecision::silent(rationale),
                    s => FdaDecision::announce(s, announcement_text(s), rationale),
                })
            }
        }
    }
}

/// Stock wording for rule-based announcements.
pub fn announcement_text(severity: Severity) -> &'static str {
    match severity {
        Severity::None => "",
        Severity::Monitoring => {
            "The FDA has received reports of manufacturing disruptions for this product and is monitoring supply. \
             Manufacturers are encouraged to report any further problems."
        }
        Severity::Elevated => {
            "The FDA is reporting a shortage of this product. Manufacturers able to increase production are \
             encouraged to do so; purchasers should avoid ordering beyond need."
        }
        Severity::HighAlert => {
            "High alert: supply of this product is well below demand. The FDA urges manufacturers to expand \
             production and is coordinating with stakeholders to restore supply."
        }
    }
}

impl Policy for RulePolicy {
    fn backend(&self) -> &str {
        "rule"
    }

    fn analyze(&mut self, ctx: &RoleContext) -> Result<Assessment, PolicyError> {
        Ok(Self::assess(ctx))
    }

    fn decide(&mut self, assessment: &Assessment, ctx: &RoleContext, cfg: &SimConfig) -> Result<Decided, PolicyError> {
        Ok(Decided::clean(Self::choose(assessment, ctx, cfg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::context::build_context;
    use crate::agents::types::FdaSignal;
    use crate::engine::MarketState;
    use crate::market::{allocate, AllocationEntry};

    fn setup(n: usize) -> (MarketState, SimConfig) {
        let cfg = SimConfig { n_manufacturers: n, ..Default::default() };
        let mut w = MarketState::initial(&cfg);
        w.period = 2;
        (w, cfg)
    }

    fn with_outcome(w: &mut MarketState, demand: f64, supply: f64) {
        let mut out = allocate(demand, &w.manufacturers);
        out.demand = demand;
        out.total_supply = supply;
        out.shortage = (demand - supply).max(0.0);
        w.last_outcome = Some(out);
    }

    fn announce(w: &mut MarketState, severity: Severity) {
        let s = FdaSignal { period: w.period, severity, text: format!("{} notice", severity.as_str()), urgency: severity.urgency() };
        w.last_signal = Some(s.clone());
        w.signal_history.push(s);
    }

    #[test]
    fn buyer_risk_thresholds() {
        let (mut w, cfg) = setup(4);
        with_outcome(&mut w, 1.0, 0.9);
        let a = RulePolicy::assess(&build_context(Role::Buyer, &w, &cfg));
        assert_eq!(a.shortage_risk, RiskLevel::High);

        with_outcome(&mut w, 1.0, 0.97);
        let a = RulePolicy::assess(&build_context(Role::Buyer, &w, &cfg));
        assert_eq!(a.shortage_risk, RiskLevel::Moderate);

        with_outcome(&mut w, 1.0, 1.0);
        let a = RulePolicy::assess(&build_context(Role::Fda, &w, &cfg));
        assert_eq!(a.shortage_risk, RiskLevel::Low);
    }

    #[test]
    fn manufacturer_invests_thirty_percent_under_elevated_alert_at_full_use() {
        let (mut w, cfg) = setup(4);
        w.manufacturers[2].allocation_history.push(AllocationEntry { period: 1, allocated: 0.3, produced: 0.25, capacity: 0.25 });
        announce(&mut w, Severity::Elevated);
        let ctx = build_context(Role::Manufacturer { id: 2 }, &w, &cfg);
        let a = RulePolicy::assess(&ctx);
        let Decision::Manufacturer(d) = RulePolicy::choose(&a, &ctx, &cfg) else { panic!() };
        assert_eq!(d.invest_fraction, 0.30);
        assert!(d.rationale.contains("elevated notice"));
    }

    #[test]
    fn manufacturer_monitoring_and_idle_cases() {
        let (mut w, cfg) = setup(4);
        w.manufacturers[0].allocation_history.push(AllocationEntry { period: 1, allocated: 0.2, produced: 0.2, capacity: 0.25 });
        announce(&mut w, Severity::Elevated);
        let ctx = build_context(Role::Manufacturer { id: 0 }, &w, &cfg);
        let Decision::Manufacturer(d) = RulePolicy::choose(&RulePolicy::assess(&ctx), &ctx, &cfg) else { panic!() };
        assert_eq!(d.invest_fraction, 0.0, "spare capacity means no expansion");

        let (mut w, cfg) = setup(4);
        announce(&mut w, Severity::Monitoring);
        let ctx = build_context(Role::Manufacturer { id: 0 }, &w, &cfg);
        let Decision::Manufacturer(d) = RulePolicy::choose(&RulePolicy::assess(&ctx), &ctx, &cfg) else { panic!() };
        assert_eq!(d.invest_fraction, 0.10);
    }

    #[test]
    fn buyer_stockpiles_under_signal_and_high_risk() {
        let (mut w, cfg) = setup(3);
        with_outcome(&mut w, 1.0, 0.9);
        announce(&mut w, Severity::Monitoring);
        let ctx = build_context(Role::Buyer, &w, &cfg);
        let a = RulePolicy::assess(&ctx);
        let Decision::Buyer(d) = RulePolicy::choose(&a, &ctx, &cfg) else { panic!() };
        assert!((d.order_quantity - 1.3).abs() < 1e-12);
    }

    #[test]
    fn fda_ladder() {
        let (mut w, cfg) = setup(4);
        with_outcome(&mut w, 1.0, 1.0);
        let decide = |w: &MarketState| {
            let ctx = build_context(Role::Fda, w, &cfg);
            match RulePolicy::choose(&RulePolicy::assess(&ctx), &ctx, &cfg) {
                Decision::Fda(d) => d,
                _ => panic!(),
            }
        };
        let d = decide(&w);
        assert!(!d.announce);
        assert_eq!(d.severity, Severity::None);
        assert!(d.text.is_empty());

        w.manufacturers[1].disrupt(0.2, 2);
        assert_eq!(decide(&w).severity, Severity::Monitoring);
        with_outcome(&mut w, 1.0, 0.95);
        assert_eq!(decide(&w).severity, Severity::Elevated);
        with_outcome(&mut w, 1.0, 0.7);
        assert_eq!(decide(&w).severity, Severity::HighAlert);
    }

    #[test]
    fn respects_custom_option_sets_and_bounds() {
        let (mut w, mut cfg) = setup(4);
        cfg.investment_options = vec![0.0, 0.25];
        cfg.buyer_order_bounds = [0.0, 1.2];
        announce(&mut w, Severity::HighAlert);
        with_outcome(&mut w, 1.0, 0.5);
        let ctx = build_context(Role::Manufacturer { id: 1 }, &w, &cfg);
        let Decision::Manufacturer(d) = RulePolicy::choose(&RulePolicy::assess(&ctx), &ctx, &cfg) else { panic!() };
        assert_eq!(d.invest_fraction, 0.25);
        let ctx = build_context(Role::Buyer, &w, &cfg);
        let Decision::Buyer(d) = RulePolicy::choose(&RulePolicy::assess(&ctx), &ctx, &cfg) else { panic!() };
        assert_eq!(d.order_quantity, 1.2);
    }
}
