//! Every private quantity in a random world gets a unique sentinel value; each role's
//! context is then searched for the sentinels it must not see.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shortage_core::agents::{build_context, FdaSignal, Role, RoleContext, Severity};
use shortage_core::engine::MarketState;
use shortage_core::market::{AllocationEntry, ClearingOutcome, Disruption, PendingInvestment, PurchaseEntry, SimConfig};

struct Sentinels {
    next: u32,
}

impl Sentinels {
    /// Fixed-width decimals ending in 7, so no sentinel is a prefix of another.
    fn take(&mut self) -> f64 {
        self.next += 1;
        format!("0.31{:05}7", self.next).parse().unwrap()
    }
}

struct Mfr {
    private: Vec<f64>,
}

struct World {
    state: Option<MarketState>,
    mfrs: Vec<Mfr>,
    aggregates: Vec<f64>,
    buyer: Vec<f64>,
}

fn random_world(rng: &mut ChaCha8Rng) -> (World, SimConfig) {
    let n = rng.random_range(2..=10);
    let cfg = SimConfig { n_manufacturers: n, horizon: rng.random_range(4..=12), ..SimConfig::default() };
    let mut s = Sentinels { next: 0 };
    let mut state = MarketState::initial(&cfg);
    state.period = rng.random_range(2..=cfg.horizon);
    let mut mfrs = Vec::new();
    for m in &mut state.manufacturers {
        let mut private = Vec::new();
        let mut v = || {
            let x = s.take();
            private.push(x);
            x
        };
        m.base_capacity = v();
        m.matured_added_capacity = v();
        m.cumulative_profit = v();
        m.pending_investments.push(PendingInvestment { units: v(), quarters_until_active: 0 });
        m.investment_history.push((1, v()));
        m.allocation_history.push(AllocationEntry { period: 1, allocated: v(), produced: v(), capacity: v() });
        if rng.random_bool(0.5) {
            m.disruption = Some(Disruption { magnitude: v(), remaining_quarters: rng.random_range(1..=4) });
        }
        private.push(m.effective_capacity());
        mfrs.push(Mfr { private });
    }
    let aggregates = vec![s.take(), s.take(), s.take()];
    state.last_outcome = Some(ClearingOutcome {
        period: state.period - 1,
        demand: aggregates[0],
        per_mfr_allocated: mfrs.iter().map(|m| m.private[5]).collect(),
        per_mfr_quantity: mfrs.iter().map(|m| m.private[6]).collect(),
        total_supply: aggregates[1],
        unfilled_from_disrupted: 0.0,
        shortage: aggregates[2],
    });
    let buyer = vec![s.take(), s.take(), s.take(), s.take(), s.take(), s.take()];
    state.buyer.inventory = buyer[0];
    state.buyer.cumulative_cost = buyer[1];
    state.buyer.last_received = buyer[2];
    state.buyer.last_order = buyer[3];
    state.buyer.history.push(PurchaseEntry { period: 1, ordered: buyer[4], received: buyer[5] });
    if rng.random_bool(0.5) {
        let sig = FdaSignal {
            period: state.period,
            severity: Severity::Elevated,
            text: "Public notice: supply is tight.".into(),
            urgency: Severity::Elevated.urgency(),
        };
        state.signal_history.push(sig.clone());
        state.last_signal = Some(sig);
    }
    (World { state: Some(state), mfrs, aggregates, buyer }, cfg)
}

fn shows(ctx: &RoleContext, value: f64) -> bool {
    ctx.to_json().contains(&value.to_string())
}

/// Panics on the first leak or omission across `worlds` random world states.
pub fn check_worlds(seed: u64, worlds: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for world_no in 0..worlds {
        let (w, cfg) = random_world(&mut rng);
        let state = w.state.as_ref().unwrap();
        let signal = state.current_signal().map(|s| s.text.clone());

        for id in 0..w.mfrs.len() {
            let ctx = build_context(Role::Manufacturer { id }, state, &cfg);
            for (other, m) in w.mfrs.iter().enumerate() {
                for v in &m.private {
                    assert_eq!(shows(&ctx, *v), other == id && *v != m.private[7], "world {world_no}: mfr {id} vs {other}: {v}");
                }
            }
            for v in w.aggregates.iter().chain(&w.buyer) {
                assert!(!shows(&ctx, *v), "world {world_no}: mfr {id} sees aggregate/buyer value {v}");
            }
            assert!(ctx.get("disrupted_manufacturers").is_none());
            if let Some(text) = &signal {
                assert_eq!(ctx.str("fda_current_text"), Some(text.as_str()));
            }
        }

        let buyer = build_context(Role::Buyer, state, &cfg);
        for m in &w.mfrs {
            for v in &m.private {
                assert!(!shows(&buyer, *v), "world {world_no}: buyer sees manufacturer value {v}");
            }
        }
        for v in w.aggregates.iter().chain(&w.buyer) {
            assert!(shows(&buyer, *v), "world {world_no}: buyer misses {v}");
        }
        assert!(buyer.entries.keys().all(|k| !k.contains("disrupt")));
        if let Some(text) = &signal {
            assert_eq!(buyer.str("fda_current_text"), Some(text.as_str()));
        }

        let fda = build_context(Role::Fda, state, &cfg);
        for m in &w.mfrs {
            for v in &m.private {
                assert!(!shows(&fda, *v), "world {world_no}: FDA sees manufacturer value {v}");
            }
        }
        for v in &w.buyer {
            assert!(!shows(&fda, *v), "world {world_no}: FDA sees buyer value {v}");
        }
        for v in &w.aggregates {
            assert!(shows(&fda, *v), "world {world_no}: FDA misses aggregate {v}");
        }
        let ids: Vec<usize> =
            fda.get("disrupted_manufacturers").unwrap().as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
        assert_eq!(ids, state.disrupted_ids());
    }
}
