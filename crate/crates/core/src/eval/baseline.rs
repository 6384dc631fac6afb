use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{BaselineNotes, PolicyIds, RunLabel, Trajectory, TrajectoryHeader, TrajectoryRecord};
use crate::gateway::{self, CompletionRequest, Gateway, GatewayError, TemplateError, TemplateStore};
use crate::market::{ConfigError, Scenario, SimConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("baseline unavailable: {0}")]
    BaselineUnavailable(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("baseline periods must be 1..={horizon} in order, got {got:?}")]
    Periods { horizon: u32, got: Vec<u32> },
}

#[derive(Debug, Deserialize)]
struct PredictedPeriod {
    period: u32,
    demand: f64,
    supply: f64,
    shortage: f64,
    inventory: f64,
    reasoning: String,
    confidence: String,
    justification: String,
}

#[derive(Debug, Deserialize)]
struct Prediction {
    periods: Vec<PredictedPeriod>,
}

fn disruption_description(cfg: &SimConfig) -> String {
    match &cfg.scenario {
        Scenario::StochasticNr => format!(
            "each quarter every working manufacturer is disrupted with probability {}, losing {} of its capacity until it recovers.",
            cfg.disruption_prob, cfg.disruption_magnitude
        ),
        Scenario::ForcedDisc { magnitudes, duration, .. } => {
            let hits: Vec<String> = magnitudes
                .iter()
                .enumerate()
                .filter(|(_, m)| **m > 0.0)
                .map(|(i, m)| format!("manufacturer {i} loses {m} of its capacity"))
                .collect();
            format!("from quarter 1, {} for {duration} quarters.", hits.join(", "))
        }
    }
}

pub fn baseline_variables(cfg: &SimConfig) -> BTreeMap<String, String> {
    let options: Vec<String> = cfg.investment_options.iter().map(f64::to_string).collect();
    let (lo, hi) = cfg.order_bounds_units();
    [
        ("horizon", cfg.horizon.to_string()),
        ("num_manufacturers", cfg.n_manufacturers.to_string()),
        ("base_capacity", cfg.base_capacity().to_string()),
        ("patient_demand", cfg.patient_demand.to_string()),
        ("disruption_description", disruption_description(cfg)),
        ("profit_margin", cfg.profit_margin.to_string()),
        ("invest_cost", cfg.invest_cost.to_string()),
        ("investment_options", options.join(", ")),
        ("price", cfg.price.to_string()),
        ("penalty", cfg.penalty.to_string()),
        ("holding_cost", cfg.holding_cost.to_string()),
        ("order_min", lo.to_string()),
        ("order_max", hi.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

/// Tolerance for the shortage consistency flag.
const CONSISTENCY_TOL: f64 = 1e-6;

/// Asks for the whole trajectory in one completion. The numbers are kept exactly as
/// predicted; a shortage that disagrees with `(demand - supply)^+` is only flagged.
pub fn zero_shot_run(
    cfg: &SimConfig,
    gateway: &Gateway,
    templates: &TemplateStore,
    case_id: Option<String>,
) -> Result<Trajectory, BaselineError> {
    cfg.validate()?;
    let vars = baseline_variables(cfg);
    let req = CompletionRequest {
        system_prompt: templates.render("zero_shot_system", &vars)?,
        user_prompt: templates.render("zero_shot", &vars)?,
        schema: gateway::zero_shot_schema(cfg.horizon),
        temperature: None,
        label: format!("zero_shot/{}", case_id.as_deref().unwrap_or("run")),
    };
    let reply = gateway.complete_structured(&req)?;
    let prediction: Prediction = serde_json::from_value(reply.doc)
        .map_err(|e| GatewayError::Schema { attempts: reply.attempts, errors: vec![e.to_string()] })?;

    let got: Vec<u32> = prediction.periods.iter().map(|p| p.period).collect();
    if !got.iter().copied().eq(1..=cfg.horizon) {
        return Err(BaselineError::Periods { horizon: cfg.horizon, got });
    }

    let mut prev_inventory = 0.0;
    let records = prediction
        .periods
        .into_iter()
        .map(|p| {
            let implied = (p.demand - p.supply).max(0.0);
            let mut flags = Vec::new();
            if (p.shortage - implied).abs() > CONSISTENCY_TOL {
                flags.push(format!("shortage inconsistent: reported {}, (demand - supply)^+ = {implied}", p.shortage));
            }
            let unmet = (cfg.patient_demand - p.supply - prev_inventory).max(0.0);
            prev_inventory = p.inventory;
            TrajectoryRecord {
                period: p.period,
                total_demand: p.demand,
                total_supply: p.supply,
                shortage: p.shortage,
                patient_demand: cfg.patient_demand,
                unmet_patient_demand: unmet,
                buyer_inventory: p.inventory,
                fda_announcement: None,
                disrupted_set: Vec::new(),
                new_disruptions: Vec::new(),
                per_mfr_quantity: Vec::new(),
                per_mfr_capacity: Vec::new(),
                per_mfr_investment: Vec::new(),
                decisions: Vec::new(),
                costs: None,
                baseline: Some(BaselineNotes {
                    reasoning: p.reasoning,
                    confidence: p.confidence,
                    justification: p.justification,
                }),
                flags,
            }
        })
        .collect();

    let backend = format!("zero_shot:{}", gateway.config().model);
    Ok(Trajectory {
        header: TrajectoryHeader {
            config: cfg.clone(),
            seed: cfg.seed,
            replicate: 0,
            policies: PolicyIds {
                manufacturers: vec![backend.clone(); cfg.n_manufacturers],
                buyer: backend.clone(),
                fda: backend,
            },
            case_id,
            label: RunLabel::ZeroShot,
        },
        records,
    })
}
