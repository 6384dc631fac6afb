use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest and largest supported horizon, in quarters.
pub const MIN_HORIZON: u32 = 4;
pub const MAX_HORIZON: u32 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("n_manufacturers must be at least 2 (got {0})")]
    TooFewManufacturers(usize),
    #[error("horizon must be within [{MIN_HORIZON}, {MAX_HORIZON}] quarters (got {0})")]
    HorizonOutOfRange(u32),
    #[error("{field} must be within [0, 1] (got {value})")]
    NotAFraction { field: &'static str, value: f64 },
    #[error("{field} must be finite and non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("investment_options must be sorted ascending, within [0, 1] and include 0")]
    BadInvestmentOptions,
    #[error("buyer_order_bounds must satisfy 0 <= min <= max (got [{0}, {1}])")]
    BadOrderBounds(f64, f64),
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("forced disruption lists {got} magnitudes for {n} manufacturers")]
    TooManyForcedMagnitudes { got: usize, n: usize },
    #[error("forced disruption duration must be at least 1 quarter")]
    ZeroForcedDuration,
}

/// How disruptions enter a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Every non-disrupted manufacturer is disrupted with probability λ each quarter.
    StochasticNr,
    /// Manufacturer `i` starts period 1 disrupted with `magnitudes[i]` for `duration`
    /// quarters. Zero magnitudes (and indices past the end of the list) are left alone.
    /// Stochastic disruptions come on top only when `background_prob` is set above 0;
    /// `disruption_prob` is not used by this scenario.
    ForcedDisc {
        magnitudes: Vec<f64>,
        duration: u32,
        #[serde(default)]
        background_prob: f64,
    },
}

/// Distribution of disruption durations for stochastic draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoveryDist {
    /// Discrete uniform over `{1, ..., T}`.
    #[default]
    UniformHorizon,
    Fixed { quarters: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_manufacturers: usize,
    pub horizon: u32,
    pub patient_demand: f64,
    pub disruption_prob: f64,
    pub disruption_magnitude: f64,
    pub recovery: RecoveryDist,
    pub price: f64,
    pub penalty: f64,
    pub holding_cost: f64,
    pub invest_cost: f64,
    pub profit_margin: f64,
    pub investment_options: Vec<f64>,
    /// Order bounds as multiples of patient demand.
    pub buyer_order_bounds: [f64; 2],
    pub scenario: Scenario,
    pub seed: u64,
    pub replications: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_manufacturers: 4,
            horizon: 6,
            patient_demand: 1.0,
            disruption_prob: 0.05,
            disruption_magnitude: 0.2,
            recovery: RecoveryDist::UniformHorizon,
            price: 1.0,
            penalty: 1.1,
            holding_cost: 0.1,
            invest_cost: 0.5,
            profit_margin: 1.0,
            investment_options: vec![0.0, 0.10, 0.20, 0.30, 0.50],
            buyer_order_bounds: [0.0, 2.0],
            scenario: Scenario::StochasticNr,
            seed: 0,
            replications: 3,
        }
    }
}

fn fraction(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::NotAFraction { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Negative { field, value })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_manufacturers < 2 {
            return Err(ConfigError::TooFewManufacturers(self.n_manufacturers));
        }
        if !(MIN_HORIZON..=MAX_HORIZON).contains(&self.horizon) {
            return Err(ConfigError::HorizonOutOfRange(self.horizon));
        }
        fraction("disruption_prob", self.disruption_prob)?;
        fraction("disruption_magnitude", self.disruption_magnitude)?;
        non_negative("patient_demand", self.patient_demand)?;
        non_negative("price", self.price)?;
        non_negative("penalty", self.penalty)?;
        non_negative("holding_cost", self.holding_cost)?;
        non_negative("invest_cost", self.invest_cost)?;
        non_negative("profit_margin", self.profit_margin)?;

        let opts = &self.investment_options;
        let sorted = opts.windows(2).all(|w| w[0] < w[1]);
        let in_range = opts.iter().all(|v| (0.0..=1.0).contains(v));
        if opts.is_empty() || !sorted || !in_range || !opts.contains(&0.0) {
            return Err(ConfigError::BadInvestmentOptions);
        }

        let [lo, hi] = self.buyer_order_bounds;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(ConfigError::BadOrderBounds(lo, hi));
        }
        if self.replications == 0 {
            return Err(ConfigError::NoReplications);
        }
        if let RecoveryDist::Fixed { quarters: 0 } = self.recovery {
            return Err(ConfigError::ZeroForcedDuration);
        }
        if let Scenario::ForcedDisc { magnitudes, duration, background_prob } = &self.scenario {
            fraction("background_prob", *background_prob)?;
            if magnitudes.len() > self.n_manufacturers {
                return Err(ConfigError::TooManyForcedMagnitudes {
                    got: magnitudes.len(),
                    n: self.n_manufacturers,
                });
            }
            for m in magnitudes {
                fraction("forced magnitude", *m)?;
            }
            if *duration == 0 {
                return Err(ConfigError::ZeroForcedDuration);
            }
        }
        Ok(())
    }

    /// Per-quarter probability of a stochastic disruption under the configured scenario.
    pub fn stochastic_prob(&self) -> f64 {
        match self.scenario {
            Scenario::StochasticNr => self.disruption_prob,
            Scenario::ForcedDisc { background_prob, .. } => background_prob,
        }
    }

    /// Initial per-manufacturer capacity `D0 / n`.
    pub fn base_capacity(&self) -> f64 {
        self.patient_demand / self.n_manufacturers as f64
    }

    pub fn order_bounds_units(&self) -> (f64, f64) {
        let [lo, hi] = self.buyer_order_bounds;
        (lo * self.patient_demand, hi * self.patient_demand)
    }

    /// The legal investment fraction closest to `value`; ties go to the smaller option.
    pub fn nearest_investment_option(&self, value: f64) -> f64 {
        let mut best = self.investment_options[0];
        for &opt in &self.investment_options {
            if (opt - value).abs() < (best - value).abs() - 1e-12 {
                best = opt;
            }
        }
        best
    }
}
