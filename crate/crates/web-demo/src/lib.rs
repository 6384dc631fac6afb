//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings; errors come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shortage_core::engine::{run_simulation, Policies};
use shortage_core::eval::{fip, resolution_time, rlp, trajectory_fip, trajectory_resolution_time, EpsilonPolicy};
use shortage_core::market::{allocate, ManufacturerState, SimConfig};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmInput {
    pub capacity: f64,
    /// Capacity lost to a disruption; 0 means the firm is running normally.
    #[serde(default)]
    pub disruption: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricInput {
    pub shortages: Vec<f64>,
    #[serde(default)]
    pub interventions: Vec<bool>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub reference_time: Option<u32>,
}

fn default_epsilon() -> f64 {
    EpsilonPolicy::default().epsilon()
}

#[derive(Debug, Serialize)]
pub struct PeriodRow {
    pub period: u32,
    pub shortage: f64,
    pub total_supply: f64,
    pub disrupted: Vec<usize>,
    pub capacity: Vec<f64>,
    pub announced: bool,
}

fn parse<T: for<'de> Deserialize<'de>>(input: &str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad input: {e}"))
}

pub fn allocation(demand: f64, firms: &[FirmInput]) -> Result<Value, String> {
    if firms.is_empty() || firms.len() > 10 {
        return Err("between 1 and 10 firms".into());
    }
    if !(demand.is_finite() && demand >= 0.0) {
        return Err("demand must be a non-negative number".into());
    }
    let states: Vec<ManufacturerState> = firms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if !(f.capacity.is_finite() && f.capacity >= 0.0 && (0.0..=1.0).contains(&f.disruption)) {
                return Err(format!("firm {i}: capacity must be >= 0 and disruption in [0, 1]"));
            }
            let mut s = ManufacturerState::new(i, f.capacity);
            if f.disruption > 0.0 {
                s.disrupt(f.disruption, 1);
            }
            Ok(s)
        })
        .collect::<Result<_, _>>()?;
    let out = allocate(demand, &states);
    let capacity: Vec<f64> = states.iter().map(ManufacturerState::effective_capacity).collect();
    Ok(json!({ "capacity": capacity, "outcome": out }))
}

pub fn simulation(config: &str, seed: u64) -> Result<Value, String> {
    let cfg: SimConfig = parse(config)?;
    let t = run_simulation(&cfg, Policies::rule(cfg.n_manufacturers), seed).map_err(|e| e.to_string())?;
    let rows: Vec<PeriodRow> = t
        .records
        .iter()
        .map(|r| PeriodRow {
            period: r.period,
            shortage: r.shortage,
            total_supply: r.total_supply,
            disrupted: r.disrupted_set.clone(),
            capacity: r.per_mfr_capacity.clone(),
            announced: r.intervened(),
        })
        .collect();
    let eps = EpsilonPolicy::default();
    Ok(json!({
        "periods": rows,
        "fip": trajectory_fip(&t),
        "resolution_time": trajectory_resolution_time(&t, eps),
        "jsonl": t.records_jsonl(),
    }))
}

pub fn metrics(input: &MetricInput) -> Result<Value, String> {
    let eps = EpsilonPolicy::new(input.epsilon).map_err(|e| e.to_string())?;
    let t = resolution_time(&input.shortages, eps);
    let lag = match input.reference_time {
        Some(0) => return Err("reference time must be at least 1".into()),
        Some(t_gt) => Some(rlp(f64::from(t), t_gt)),
        None => None,
    };
    let f = (!input.interventions.is_empty()).then(|| fip(&input.interventions));
    Ok(json!({ "resolution_time": t, "fip": f, "rlp": lag }))
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// `firms`: `[{"capacity": 0.25, "disruption": 0.5}, ...]`.
#[wasm_bindgen]
pub fn clear_market(demand: f64, firms: &str) -> String {
    respond(parse::<Vec<FirmInput>>(firms).and_then(|f| allocation(demand, &f)))
}

/// `config`: a partial `SimConfig`; omitted fields take their defaults.
#[wasm_bindgen]
pub fn simulate_rule(config: &str, seed: u64) -> String {
    respond(simulation(config, seed))
}

#[wasm_bindgen]
pub fn score(input: &str) -> String {
    respond(parse::<MetricInput>(input).and_then(|m| metrics(&m)))
}
