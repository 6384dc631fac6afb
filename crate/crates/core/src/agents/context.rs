//! Per-role views of the world. Each builder copies only what that role may know:
//! a manufacturer sees its own plant, the buyer sees aggregates plus its own stock,
//! the FDA sees aggregates plus disruption reports. Everyone sees announcements.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::types::{FdaSignal, Role, Severity};
use crate::engine::MarketState;
use crate::market::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleContext {
    pub role: Role,
    pub period: u32,
    pub entries: IndexMap<String, Value>,
}

impl RoleContext {
    fn new(role: Role, period: u32) -> Self {
        Self { role, period, entries: IndexMap::new() }
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Value::as_str)
    }

    pub fn severity(&self) -> Severity {
        self.str("fda_current_severity").and_then(Severity::parse).unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("context serializes")
    }

    pub fn entries_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("context serializes")
    }
}

fn put_signals(ctx: &mut RoleContext, world: &MarketState) {
    let current = world.current_signal();
    ctx.put("fda_current_severity", current.map_or(Severity::None, |s| s.severity).as_str());
    ctx.put("fda_current_text", current.map_or("", |s| s.text.as_str()));
    ctx.put("fda_latest_announcement_text", world.last_signal.as_ref().map_or("", |s| s.text.as_str()));
    ctx.put("fda_latest_announcement_period", world.last_signal.as_ref().map(|s| s.period));
    let prior = world.signal_history.iter().filter(|s| s.period < world.period).count();
    ctx.put("fda_prior_announcements", prior);
}

fn put_aggregates(ctx: &mut RoleContext, world: &MarketState) {
    let last = world.last_outcome.as_ref();
    ctx.put("last_demand", last.map(|o| o.demand));
    ctx.put("last_supply", last.map(|o| o.total_supply));
    ctx.put("last_shortage", last.map(|o| o.shortage));
}

/// Builds the context for `role` from the pre-decision snapshot of the current quarter.
pub fn build_context(role: Role, world: &MarketState, cfg: &SimConfig) -> RoleContext {
    let mut ctx = RoleContext::new(role, world.period);
    ctx.put("period", world.period);
    ctx.put("horizon", world.horizon);
    ctx.put("num_manufacturers", world.manufacturers.len());
    match role {
        Role::Manufacturer { id } => {
            let me = &world.manufacturers[id];
            ctx.put("manufacturer_id", id);
            ctx.put("own_base_capacity", me.base_capacity);
            ctx.put("own_added_capacity", me.matured_added_capacity);
            ctx.put("own_effective_capacity", me.effective_capacity());
            ctx.put("own_disrupted", me.is_disrupted());
            ctx.put("own_disruption_magnitude", me.disruption.map(|d| d.magnitude));
            ctx.put("own_recovery_quarters", me.disruption.map(|d| d.remaining_quarters));
            ctx.put("own_pending_investment", me.pending_units());
            let investments: Vec<Value> =
                me.investment_history.iter().map(|(p, u)| json!({"period": p, "units": u})).collect();
            ctx.put("own_investment_history", investments);
            let allocations: Vec<Value> = me
                .allocation_history
                .iter()
                .map(|a| json!({"period": a.period, "allocated": a.allocated, "produced": a.produced}))
                .collect();
            ctx.put("own_allocated_demand_history", allocations);
            let utilization = me
                .allocation_history
                .last()
                .filter(|a| a.capacity > 0.0)
                .map(|a| a.allocated / a.capacity);
            ctx.put("own_last_utilization", utilization);
            ctx.put("own_cumulative_profit", me.cumulative_profit);
            ctx.put("profit_margin", cfg.profit_margin);
            ctx.put("invest_cost", cfg.invest_cost);
            ctx.put("investment_options", cfg.investment_options.clone());
            put_signals(&mut ctx, world);
        }
        Role::Buyer => {
            put_aggregates(&mut ctx, world);
            let b = &world.buyer;
            ctx.put("inventory", b.inventory);
            ctx.put("last_order", b.last_order);
            ctx.put("last_received", b.last_received);
            ctx.put("cumulative_cost", b.cumulative_cost);
            let history: Vec<Value> = b
                .history
                .iter()
                .map(|h| json!({"period": h.period, "ordered": h.ordered, "received": h.received}))
                .collect();
            ctx.put("purchase_history", history);
            ctx.put("patient_demand", cfg.patient_demand);
            ctx.put("price", cfg.price);
            ctx.put("penalty", cfg.penalty);
            ctx.put("holding_cost", cfg.holding_cost);
            let (lo, hi) = cfg.order_bounds_units();
            ctx.put("order_min", lo);
            ctx.put("order_max", hi);
            put_signals(&mut ctx, world);
        }
        Role::Fda => {
            put_aggregates(&mut ctx, world);
            let disrupted = world.disrupted_ids();
            ctx.put("disruption_count", disrupted.len());
            ctx.put("disrupted_manufacturers", disrupted);
            ctx.put("new_disruptions", world.new_disruptions.clone());
            let past: Vec<Value> = world
                .signal_history
                .iter()
                .map(|s: &FdaSignal| json!({"period": s.period, "severity": s.severity, "text": s.text}))
                .collect();
            ctx.put("past_announcements", past);
        }
    }
    ctx
}
