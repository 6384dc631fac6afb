use serde::{Deserialize, Serialize};

use super::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BuyerAccounting {
    pub purchase_cost: f64,
    pub holding_cost_paid: f64,
    pub stockout_penalty: f64,
    pub unmet_patient_demand: f64,
    pub new_inventory: f64,
}

impl BuyerAccounting {
    pub fn total_cost(&self) -> f64 {
        self.purchase_cost + self.holding_cost_paid + self.stockout_penalty
    }
}

/// Quarter-end books for the buyer. Patients are served from this quarter's
/// deliveries plus carried stock; only received units are invoiced.
pub fn buyer_accounting(received: f64, patient_demand: f64, inventory_prev: f64, cfg: &SimConfig) -> BuyerAccounting {
    let available = received + inventory_prev;
    let unmet = (patient_demand - available).max(0.0);
    let new_inventory = (available - patient_demand).max(0.0);
    BuyerAccounting {
        purchase_cost: cfg.price * received,
        holding_cost_paid: cfg.holding_cost * new_inventory,
        stockout_penalty: cfg.penalty * unmet,
        unmet_patient_demand: unmet,
        new_inventory,
    }
}

/// Quarter profit: margin on units produced minus the upfront cost of new capacity.
pub fn manufacturer_accounting(produced: f64, invested_units: f64, cfg: &SimConfig) -> f64 {
    cfg.profit_margin * produced - cfg.invest_cost * invested_units
}
