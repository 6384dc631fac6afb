use serde::{Deserialize, Serialize};

use super::state::ManufacturerState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingOutcome {
    /// Period the outcome belongs to; `allocate` leaves it at 0 for the caller to set.
    pub period: u32,
    pub demand: f64,
    /// Demand routed to each manufacturer before capacity limits.
    pub per_mfr_allocated: Vec<f64>,
    pub per_mfr_quantity: Vec<f64>,
    pub total_supply: f64,
    pub unfilled_from_disrupted: f64,
    pub shortage: f64,
}

/// Clears `demand` against the manufacturers' effective capacities.
///
/// Disrupted manufacturers get an equal share `D/n` capped at capacity. What they
/// cannot make is split evenly over the undisrupted ones on top of their own share,
/// again capped at capacity. When every manufacturer is disrupted the unfilled part
/// is not redistributed and ends up in the shortage.
pub fn allocate(demand: f64, states: &[ManufacturerState]) -> ClearingOutcome {
    let n = states.len();
    let share = if n == 0 { 0.0 } else { demand / n as f64 };
    let capacities: Vec<f64> = states.iter().map(ManufacturerState::effective_capacity).collect();

    let unfilled: f64 = states
        .iter()
        .zip(&capacities)
        .filter(|(s, _)| s.is_disrupted())
        .map(|(_, &c)| (share - c).max(0.0))
        .sum();
    let undisrupted = states.iter().filter(|s| !s.is_disrupted()).count();
    let top_up = if undisrupted == 0 { 0.0 } else { unfilled / undisrupted as f64 };

    let per_mfr_allocated: Vec<f64> = states
        .iter()
        .map(|s| if s.is_disrupted() { share } else { share + top_up })
        .collect();
    let per_mfr_quantity: Vec<f64> = per_mfr_allocated
        .iter()
        .zip(&capacities)
        .map(|(&a, &c)| a.min(c))
        .collect();
    let total_supply: f64 = per_mfr_quantity.iter().sum();

    ClearingOutcome {
        period: 0,
        demand,
        per_mfr_allocated,
        per_mfr_quantity,
        total_supply,
        unfilled_from_disrupted: unfilled,
        shortage: (demand - total_supply).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn mfr(id: usize, base: f64, disruption: Option<f64>) -> ManufacturerState {
        let mut m = ManufacturerState::new(id, base);
        if let Some(d) = disruption {
            m.disrupt(d, 1);
        }
        m
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < EPS)
    }

    #[test]
    fn equilibrium_splits_evenly() {
        let states: Vec<_> = (0..4).map(|i| mfr(i, 0.25, None)).collect();
        let out = allocate(1.0, &states);
        assert_eq!(out.per_mfr_quantity, vec![0.25; 4]);
        assert_eq!(out.total_supply, 1.0);
        assert_eq!(out.shortage, 0.0);
    }

    #[test]
    fn duopoly_with_one_disrupted() {
        // effective c0 = 0.5 * 0.8 = 0.4, c1 = 0.5
        let states = vec![mfr(0, 0.5, Some(0.2)), mfr(1, 0.5, None)];
        let out = allocate(1.0, &states);
        assert!(close(&out.per_mfr_quantity, &[0.4, 0.5]));
        assert!((out.unfilled_from_disrupted - 0.1).abs() < EPS);
        assert!((out.total_supply - 0.9).abs() < EPS);
        assert!((out.shortage - 0.1).abs() < EPS);
    }

    #[test]
    fn three_firms_absorb_the_gap() {
        // c0 = 0.25 * 0.8 = 0.2 while disrupted; c1 = c2 = 0.55
        let states = vec![mfr(0, 0.25, Some(0.2)), mfr(1, 0.55, None), mfr(2, 0.55, None)];
        let out = allocate(1.2, &states);
        assert!(close(&out.per_mfr_quantity, &[0.2, 0.5, 0.5]));
        assert!((out.unfilled_from_disrupted - 0.2).abs() < EPS);
        assert!((out.total_supply - 1.2).abs() < EPS);
        assert!(out.shortage.abs() < EPS);
    }

    #[test]
    fn all_disrupted_leaves_gap_unfilled() {
        let states = vec![mfr(0, 0.5, Some(0.5)), mfr(1, 0.5, Some(0.5))];
        let out = allocate(1.0, &states);
        assert!(close(&out.per_mfr_quantity, &[0.25, 0.25]));
        assert!((out.unfilled_from_disrupted - 0.5).abs() < EPS);
        assert!((out.shortage - 0.5).abs() < EPS);
    }

    #[test]
    fn zero_demand_and_empty_market() {
        let states = vec![mfr(0, 0.5, None), mfr(1, 0.5, None)];
        let out = allocate(0.0, &states);
        assert_eq!(out.total_supply, 0.0);
        assert_eq!(out.shortage, 0.0);
        let out = allocate(1.0, &[]);
        assert_eq!(out.shortage, 1.0);
    }
}
