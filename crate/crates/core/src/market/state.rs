use serde::{Deserialize, Serialize};

/// An active capacity shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disruption {
    /// Fraction of capacity lost while active.
    pub magnitude: f64,
    /// Quarters left including the current one; always >= 1 while stored.
    pub remaining_quarters: u32,
}

/// Capacity bought in an earlier quarter that has not come online yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingInvestment {
    pub units: f64,
    /// 0 means the capacity is added at the start of the next period.
    pub quarters_until_active: u32,
}

/// One past quarter as seen by the manufacturer itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationEntry {
    pub period: u32,
    pub allocated: f64,
    pub produced: f64,
    /// Effective capacity during that quarter.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturerState {
    pub id: usize,
    pub base_capacity: f64,
    pub matured_added_capacity: f64,
    pub pending_investments: Vec<PendingInvestment>,
    pub disruption: Option<Disruption>,
    pub allocation_history: Vec<AllocationEntry>,
    /// (period, units) of every non-zero investment decision.
    pub investment_history: Vec<(u32, f64)>,
    pub cumulative_profit: f64,
}

impl ManufacturerState {
    pub fn new(id: usize, base_capacity: f64) -> Self {
        Self {
            id,
            base_capacity,
            matured_added_capacity: 0.0,
            pending_investments: Vec::new(),
            disruption: None,
            allocation_history: Vec::new(),
            investment_history: Vec::new(),
            cumulative_profit: 0.0,
        }
    }

    /// Installed capacity before any disruption is applied.
    pub fn nominal_capacity(&self) -> f64 {
        self.base_capacity + self.matured_added_capacity
    }

    pub fn effective_capacity(&self) -> f64 {
        let nominal = self.nominal_capacity();
        match self.disruption {
            Some(d) => (nominal * (1.0 - d.magnitude)).max(0.0),
            None => nominal,
        }
    }

    pub fn is_disrupted(&self) -> bool {
        self.disruption.is_some()
    }

    /// Starts a disruption unless one is already active. Returns whether it took.
    pub fn disrupt(&mut self, magnitude: f64, quarters: u32) -> bool {
        if self.disruption.is_some() || quarters == 0 {
            return false;
        }
        self.disruption = Some(Disruption { magnitude, remaining_quarters: quarters });
        true
    }

    pub fn mature_investments(&mut self) {
        let mut still_pending = Vec::with_capacity(self.pending_investments.len());
        for p in self.pending_investments.drain(..) {
            if p.quarters_until_active == 0 {
                self.matured_added_capacity += p.units;
            } else {
                still_pending.push(PendingInvestment {
                    units: p.units,
                    quarters_until_active: p.quarters_until_active - 1,
                });
            }
        }
        self.pending_investments = still_pending;
    }

    pub fn tick_disruption(&mut self) {
        if let Some(d) = &mut self.disruption {
            d.remaining_quarters = d.remaining_quarters.saturating_sub(1);
            if d.remaining_quarters == 0 {
                self.disruption = None;
            }
        }
    }

    pub fn pending_units(&self) -> f64 {
        self.pending_investments.iter().map(|p| p.units).sum()
    }
}

pub fn mature_investments(states: &mut [ManufacturerState]) {
    states.iter_mut().for_each(ManufacturerState::mature_investments);
}

pub fn tick_disruptions(states: &mut [ManufacturerState]) {
    states.iter_mut().for_each(ManufacturerState::tick_disruption);
}

/// One past quarter from the buyer's side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurchaseEntry {
    pub period: u32,
    pub ordered: f64,
    pub received: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BuyerState {
    pub inventory: f64,
    pub cumulative_cost: f64,
    pub last_received: f64,
    pub last_order: f64,
    pub history: Vec<PurchaseEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn effective_capacity_examples() {
        let mut m = ManufacturerState::new(0, 0.25);
        assert_eq!(m.effective_capacity(), 0.25);
        m.disrupt(0.2, 3);
        assert!((m.effective_capacity() - 0.20).abs() < EPS);
        m.matured_added_capacity = 0.075;
        assert!((m.effective_capacity() - 0.26).abs() < EPS);
    }

    #[test]
    fn second_disruption_is_refused_while_active() {
        let mut m = ManufacturerState::new(0, 0.25);
        assert!(m.disrupt(0.2, 2));
        assert!(!m.disrupt(0.9, 5));
        assert_eq!(m.disruption.unwrap().magnitude, 0.2);
    }

    #[test]
    fn maturing_examples() {
        let mut m = ManufacturerState::new(0, 0.25);
        m.pending_investments.push(PendingInvestment { units: 0.075, quarters_until_active: 0 });
        m.mature_investments();
        assert_eq!(m.matured_added_capacity, 0.075);
        assert!(m.pending_investments.is_empty());

        let mut m = ManufacturerState::new(0, 0.25);
        m.pending_investments.push(PendingInvestment { units: 0.075, quarters_until_active: 1 });
        m.mature_investments();
        assert_eq!(m.matured_added_capacity, 0.0);
        assert_eq!(
            m.pending_investments,
            vec![PendingInvestment { units: 0.075, quarters_until_active: 0 }]
        );
        assert_eq!(m.effective_capacity(), 0.25);

        let untouched = ManufacturerState::new(1, 0.5);
        let mut copy = untouched.clone();
        copy.mature_investments();
        assert_eq!(copy, untouched);
    }

    #[test]
    fn disruption_tick_examples() {
        let mut m = ManufacturerState::new(0, 0.25);
        m.disrupt(0.2, 2);
        m.tick_disruption();
        assert_eq!(m.disruption, Some(Disruption { magnitude: 0.2, remaining_quarters: 1 }));
        m.tick_disruption();
        assert_eq!(m.disruption, None);
        assert_eq!(m.effective_capacity(), 0.25);

        let mut clean = ManufacturerState::new(0, 0.25);
        clean.tick_disruption();
        assert_eq!(clean, ManufacturerState::new(0, 0.25));
    }

    #[test]
    fn capacity_restores_after_exactly_remaining_ticks() {
        for quarters in 1..=12 {
            let mut m = ManufacturerState::new(0, 0.3);
            m.matured_added_capacity = 0.05;
            let before = m.effective_capacity();
            m.disrupt(0.4, quarters);
            for t in 0..quarters {
                assert!(m.is_disrupted(), "cleared early at tick {t}");
                m.tick_disruption();
            }
            assert_eq!(m.effective_capacity(), before);
        }
    }
}
