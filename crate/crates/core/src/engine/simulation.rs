use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::rng::manufacturer_stream;
use super::state::MarketState;
use super::trajectory::{DecisionEntry, PeriodCosts, PolicyIds, RunLabel, Trajectory, TrajectoryHeader, TrajectoryRecord};
use crate::agents::{build_context, Decided, Decision, FdaSignal, Policy, PolicyError, Role, RulePolicy};
use crate::market::{
    allocate, buyer_accounting, manufacturer_accounting, mature_investments, tick_disruptions, AllocationEntry,
    ConfigError, PendingInvestment, PurchaseEntry, RecoveryDist, Scenario, SimConfig,
};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected {expected} manufacturer policies, got {got}")]
    PolicyCount { expected: usize, got: usize },
    #[error("{role} policy unavailable in period {period}: {message}")]
    PolicyUnavailable { role: Role, period: u32, message: String },
    #[error("simulation already finished")]
    Finished,
    #[error("timeline step out of order: {0}")]
    OutOfOrder(&'static str),
    #[error("market invariant violated in period {period}: {message}")]
    Invariant { period: u32, message: String },
}

/// One policy per agent.
pub struct Policies {
    pub manufacturers: Vec<Box<dyn Policy>>,
    pub buyer: Box<dyn Policy>,
    pub fda: Box<dyn Policy>,
}

impl Policies {
    pub fn rule(n: usize) -> Self {
        Self::from_fn(n, |_| Box::new(RulePolicy))
    }

    pub fn from_fn(n: usize, mut make: impl FnMut(Role) -> Box<dyn Policy>) -> Self {
        Self {
            manufacturers: (0..n).map(|id| make(Role::Manufacturer { id })).collect(),
            buyer: make(Role::Buyer),
            fda: make(Role::Fda),
        }
    }

    pub fn ids(&self) -> PolicyIds {
        PolicyIds {
            manufacturers: self.manufacturers.iter().map(|p| p.backend().to_owned()).collect(),
            buyer: self.buyer.backend().to_owned(),
            fda: self.fda.backend().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Substitute the rule backend when a policy fails; otherwise the run aborts.
    pub allow_fallback: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { allow_fallback: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Waiting for the next quarter to open.
    Idle,
    /// Investments matured and disruptions drawn; FDA to move.
    Opened,
    /// FDA has moved; manufacturers and buyer to move.
    Signalled,
    Finished,
}

/// Step-wise runner over the quarterly timeline. `step` plays one whole quarter;
/// `open_period`, `fda_phase` and `close_period` expose its parts so a caller can
/// pause between them (the human-as-FDA mode does).
pub struct Simulation {
    cfg: SimConfig,
    seed: u64,
    replicate: u32,
    case_id: Option<String>,
    options: EngineOptions,
    world: MarketState,
    policies: Policies,
    ids: PolicyIds,
    rngs: Vec<ChaCha8Rng>,
    records: Vec<TrajectoryRecord>,
    stage: Stage,
    seq: u64,
    fda_entry: Option<DecisionEntry>,
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl Simulation {
    pub fn new(cfg: SimConfig, policies: Policies, seed: u64) -> Result<Self, EngineError> {
        cfg.validate()?;
        if policies.manufacturers.len() != cfg.n_manufacturers {
            return Err(EngineError::PolicyCount { expected: cfg.n_manufacturers, got: policies.manufacturers.len() });
        }
        let ids = policies.ids();
        Ok(Self {
            world: MarketState::initial(&cfg),
            rngs: (0..cfg.n_manufacturers).map(|i| manufacturer_stream(seed, i)).collect(),
            cfg,
            seed,
            replicate: 0,
            case_id: None,
            options: EngineOptions::default(),
            policies,
            ids,
            records: Vec::new(),
            stage: Stage::Idle,
            seq: 0,
            fda_entry: None,
        })
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_case(mut self, case_id: Option<String>, replicate: u32) -> Self {
        self.case_id = case_id;
        self.replicate = replicate;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn world(&self) -> &MarketState {
        &self.world
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn is_finished(&self) -> bool {
        self.stage == Stage::Finished
    }

    pub fn header(&self) -> TrajectoryHeader {
        TrajectoryHeader {
            config: self.cfg.clone(),
            seed: self.seed,
            replicate: self.replicate,
            policies: self.ids.clone(),
            case_id: self.case_id.clone(),
            label: RunLabel::Simulated,
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory { header: self.header(), records: self.records.clone() }
    }

    /// Steps (a) and (b): mature investments, then apply forced or drawn disruptions.
    pub fn open_period(&mut self) -> Result<(), EngineError> {
        match self.stage {
            Stage::Idle => {}
            Stage::Finished => return Err(EngineError::Finished),
            _ => return Err(EngineError::OutOfOrder("quarter already open")),
        }
        let w = &mut self.world;
        w.period += 1;
        w.new_disruptions.clear();
        mature_investments(&mut w.manufacturers);

        if let (1, Scenario::ForcedDisc { magnitudes, duration, .. }) = (w.period, &self.cfg.scenario) {
            for (m, &delta) in w.manufacturers.iter_mut().zip(magnitudes) {
                if delta > 0.0 && m.disrupt(delta, *duration) {
                    w.new_disruptions.push(m.id);
                }
            }
        }
        let p = self.cfg.stochastic_prob();
        if p > 0.0 {
            for (m, rng) in w.manufacturers.iter_mut().zip(self.rngs.iter_mut()) {
                if m.is_disrupted() {
                    continue;
                }
                if rng.random::<f64>() < p {
                    let quarters = match self.cfg.recovery {
                        RecoveryDist::UniformHorizon => rng.random_range(1..=self.cfg.horizon),
                        RecoveryDist::Fixed { quarters } => quarters,
                    };
                    if m.disrupt(self.cfg.disruption_magnitude, quarters) {
                        w.new_disruptions.push(m.id);
                    }
                }
            }
        }
        self.stage = Stage::Opened;
        Ok(())
    }

    /// Step (c): the FDA reads the opened quarter and may announce.
    pub fn fda_phase(&mut self) -> Result<Option<&FdaSignal>, EngineError> {
        if self.stage != Stage::Opened {
            return Err(self.order_error("FDA moves after the quarter opens"));
        }
        let fallback = self.options.allow_fallback;
        let (entry, mut decided) = run_agent(Role::Fda, self.policies.fda.as_mut(), &self.world, &self.cfg, fallback)?;
        let mut entry = self.stamp(entry, &mut decided);
        let Decision::Fda(d) = &mut entry.decision else { unreachable!("FDA policy produced a foreign decision") };
        if d.normalize() {
            entry.flags.push("inconsistent announcement normalized to silence".into());
        }
        let signal = FdaSignal::from_decision(self.world.period, d);
        if let Some(s) = &signal {
            self.world.last_signal = Some(s.clone());
            self.world.signal_history.push(s.clone());
        }
        self.fda_entry = Some(entry);
        self.stage = Stage::Signalled;
        Ok(self.world.current_signal())
    }

    /// Steps (d) to (f): manufacturer and buyer decisions from one snapshot, clearing,
    /// accounting, disruption tick and logging.
    pub fn close_period(&mut self) -> Result<&TrajectoryRecord, EngineError> {
        if self.stage != Stage::Signalled {
            return Err(self.order_error("market clears after the FDA moves"));
        }
        let n = self.cfg.n_manufacturers;
        let fallback = self.options.allow_fallback;
        let world = &self.world;
        let cfg = &self.cfg;

        let mut agents: Vec<(Role, &mut Box<dyn Policy>)> = self
            .policies
            .manufacturers
            .iter_mut()
            .enumerate()
            .map(|(id, p)| (Role::Manufacturer { id }, p))
            .collect();
        agents.push((Role::Buyer, &mut self.policies.buyer));
        let parallel = agents.iter().any(|(_, p)| p.prefers_parallel());

        let results: Vec<Result<(DecisionEntry, Decided), EngineError>> = if parallel {
            std::thread::scope(|s| {
                let handles: Vec<_> = agents
                    .into_iter()
                    .map(|(role, p)| s.spawn(move || run_agent(role, p.as_mut(), world, cfg, fallback)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("agent thread panicked")).collect()
            })
        } else {
            agents.into_iter().map(|(role, p)| run_agent(role, p.as_mut(), world, cfg, fallback)).collect()
        };
        let mut entries = Vec::with_capacity(n + 2);
        entries.push(self.fda_entry.take().expect("FDA entry stored in fda_phase"));
        let mut invest_fractions = vec![0.0; n];
        let mut order = cfg.patient_demand;
        for r in results {
            let (entry, mut decided) = r?;
            let entry = self.stamp(entry, &mut decided);
            match (&entry.role, &entry.decision) {
                (Role::Manufacturer { id }, Decision::Manufacturer(d)) => invest_fractions[*id] = d.invest_fraction,
                (Role::Buyer, Decision::Buyer(d)) => order = d.order_quantity,
                _ => unreachable!("decision checked against role in run_agent"),
            }
            entries.push(entry);
        }

        let period = self.world.period;
        let mut outcome = allocate(order, &self.world.manufacturers);
        outcome.period = period;
        self.check_outcome(&outcome)?;

        let capacities: Vec<f64> = self.world.manufacturers.iter().map(|m| m.effective_capacity()).collect();
        let mut investments = vec![0.0; n];
        let mut profits = vec![0.0; n];
        for (i, m) in self.world.manufacturers.iter_mut().enumerate() {
            let q = outcome.per_mfr_quantity[i];
            let units = invest_fractions[i] * m.base_capacity;
            m.allocation_history.push(AllocationEntry {
                period,
                allocated: outcome.per_mfr_allocated[i],
                produced: q,
                capacity: capacities[i],
            });
            if units > 0.0 {
                m.pending_investments.push(PendingInvestment { units, quarters_until_active: 0 });
                m.investment_history.push((period, units));
            }
            let delta = manufacturer_accounting(q, units, &self.cfg);
            m.cumulative_profit += delta;
            investments[i] = units;
            profits[i] = delta;
        }

        let inventory_prev = self.world.buyer.inventory;
        let books = buyer_accounting(outcome.total_supply, self.cfg.patient_demand, inventory_prev, &self.cfg);
        let b = &mut self.world.buyer;
        b.inventory = books.new_inventory;
        b.cumulative_cost += books.total_cost();
        b.last_order = order;
        b.last_received = outcome.total_supply;
        b.history.push(PurchaseEntry { period, ordered: order, received: outcome.total_supply });

        let disrupted_set = self.world.disrupted_ids();
        let record = TrajectoryRecord {
            period,
            total_demand: outcome.demand,
            total_supply: outcome.total_supply,
            shortage: outcome.shortage,
            patient_demand: self.cfg.patient_demand,
            unmet_patient_demand: books.unmet_patient_demand,
            buyer_inventory: books.new_inventory,
            fda_announcement: self.world.current_signal().cloned(),
            disrupted_set,
            new_disruptions: self.world.new_disruptions.clone(),
            per_mfr_quantity: outcome.per_mfr_quantity.clone(),
            per_mfr_capacity: capacities,
            per_mfr_investment: investments,
            decisions: entries,
            costs: Some(PeriodCosts { buyer: books, manufacturer_profit: profits }),
            baseline: None,
            flags: Vec::new(),
        };

        tick_disruptions(&mut self.world.manufacturers);
        self.world.last_outcome = Some(outcome);
        self.records.push(record);
        self.stage = if period >= self.cfg.horizon { Stage::Finished } else { Stage::Idle };
        Ok(self.records.last().expect("record just pushed"))
    }

    /// Plays one whole quarter.
    pub fn step(&mut self) -> Result<&TrajectoryRecord, EngineError> {
        self.open_period()?;
        self.fda_phase()?;
        self.close_period()
    }

    pub fn run(mut self) -> Result<Trajectory, EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.trajectory())
    }

    fn stamp(&mut self, mut entry: DecisionEntry, decided: &mut Decided) -> DecisionEntry {
        self.seq += 1;
        entry.seq = self.seq;
        entry.flags.append(&mut decided.flags);
        entry
    }

    fn order_error(&self, what: &'static str) -> EngineError {
        if self.stage == Stage::Finished {
            EngineError::Finished
        } else {
            EngineError::OutOfOrder(what)
        }
    }

    fn check_outcome(&self, o: &crate::market::ClearingOutcome) -> Result<(), EngineError> {
        let fail = |message: String| Err(EngineError::Invariant { period: o.period, message });
        let sum: f64 = o.per_mfr_quantity.iter().sum();
        if (sum - o.total_supply).abs() > TOL {
            return fail(format!("supply {} differs from the sum of quantities {sum}", o.total_supply));
        }
        if o.total_supply > o.demand + TOL {
            return fail(format!("supply {} exceeds demand {}", o.total_supply, o.demand));
        }
        if (o.shortage - (o.demand - o.total_supply).max(0.0)).abs() > TOL {
            return fail(format!("shortage {} is not (D - Q)^+", o.shortage));
        }
        for (m, q) in self.world.manufacturers.iter().zip(&o.per_mfr_quantity) {
            if !finite_nonneg(*q) || *q > m.effective_capacity() + TOL {
                return fail(format!("manufacturer {} produced {q} beyond capacity", m.id));
            }
        }
        Ok(())
    }
}

/// Analyze and decide for one agent, falling back to rules on failure when allowed.
fn run_agent(
    role: Role,
    policy: &mut dyn Policy,
    world: &MarketState,
    cfg: &SimConfig,
    allow_fallback: bool,
) -> Result<(DecisionEntry, Decided), EngineError> {
    let ctx = build_context(role, world, cfg);
    let attempt = policy.analyze(&ctx).and_then(|a| {
        let decided = policy.decide(&a, &ctx, cfg)?;
        if decided.decision.fits(&role) {
            Ok((a, decided))
        } else {
            Err(PolicyError::Unavailable(format!("decision does not belong to {role}")))
        }
    });
    let (assessment, decided, backend, fallback, note) = match attempt {
        Ok((a, d)) => (a, d, policy.backend().to_owned(), false, None),
        Err(PolicyError::Unavailable(message)) => {
            if !allow_fallback {
                return Err(EngineError::PolicyUnavailable { role, period: world.period, message });
            }
            let a = RulePolicy::assess(&ctx);
            let d = Decided::clean(RulePolicy::choose(&a, &ctx, cfg));
            (a, d, "rule".to_owned(), true, Some(format!("fell back to rule backend: {message}")))
        }
    };
    let entry = DecisionEntry {
        seq: 0,
        role,
        backend,
        context: ctx,
        assessment,
        decision: decided.decision.clone(),
        flags: note.into_iter().collect(),
        fallback,
    };
    Ok((entry, decided))
}

pub fn run_simulation(cfg: &SimConfig, policies: Policies, seed: u64) -> Result<Trajectory, EngineError> {
    Simulation::new(cfg.clone(), policies, seed)?.run()
}

/// `k` runs with seeds `cfg.seed + r`; `make` builds fresh policies for each run.
pub fn run_replications(
    cfg: &SimConfig,
    k: u32,
    mut make: impl FnMut(u32) -> Policies,
    options: EngineOptions,
    case_id: Option<&str>,
) -> Result<Vec<Trajectory>, EngineError> {
    (0..k)
        .map(|r| {
            Simulation::new(cfg.clone(), make(r), cfg.seed.wrapping_add(u64::from(r)))?
                .with_options(options)
                .with_case(case_id.map(str::to_owned), r)
                .run()
        })
        .collect()
}
