use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Role {
    Manufacturer { id: usize },
    Buyer,
    Fda,
}

impl Role {
    pub fn stem(&self) -> &'static str {
        match self {
            Role::Manufacturer { .. } => "manufacturer",
            Role::Buyer => "buyer",
            Role::Fda => "fda",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Manufacturer { id } => write!(f, "manufacturer-{id}"),
            Role::Buyer => f.write_str("buyer"),
            Role::Fda => f.write_str("fda"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Falling,
    Stable,
    Rising,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Urgency {
    Routine,
    Elevated,
    High,
}

/// Announcement severity, ordered from silent to most alarming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    #[default]
    None,
    Monitoring,
    Elevated,
    HighAlert,
}

impl Severity {
    pub const ALL: [Severity; 4] = [Severity::None, Severity::Monitoring, Severity::Elevated, Severity::HighAlert];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::None => "none",
            Severity::Monitoring => "monitoring",
            Severity::Elevated => "elevated",
            Severity::HighAlert => "high_alert",
        }
    }

    pub fn parse(s: &str) -> Option<Severity> {
        Severity::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub fn urgency(self) -> Urgency {
        match self {
            Severity::None | Severity::Monitoring => Urgency::Routine,
            Severity::Elevated => Urgency::Elevated,
            Severity::HighAlert => Urgency::High,
        }
    }
}

/// The structured reading of a role's context produced by the analyze stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub role: Role,
    pub shortage_risk: RiskLevel,
    pub demand_trend: Trend,
    pub urgency: Urgency,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturerDecision {
    /// Capacity expansion as a fraction of base capacity; one of the configured options.
    pub invest_fraction: f64,
    pub confidence: Confidence,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerDecision {
    /// Units ordered this quarter.
    pub order_quantity: f64,
    pub confidence: Confidence,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdaDecision {
    pub announce: bool,
    pub severity: Severity,
    pub text: String,
    pub rationale: String,
}

impl FdaDecision {
    pub fn silent(rationale: impl Into<String>) -> Self {
        Self { announce: false, severity: Severity::None, text: String::new(), rationale: rationale.into() }
    }

    pub fn announce(severity: Severity, text: impl Into<String>, rationale: impl Into<String>) -> Self {
        if severity == Severity::None {
            return Self::silent(rationale);
        }
        Self { announce: true, severity, text: text.into(), rationale: rationale.into() }
    }

    /// Restores `announce = false ⇒ severity = none ∧ text = ""` (and the converse).
    /// Returns true when something had to change.
    pub fn normalize(&mut self) -> bool {
        let consistent = if self.announce {
            self.severity != Severity::None
        } else {
            self.severity == Severity::None && self.text.is_empty()
        };
        if !consistent {
            self.announce = false;
            self.severity = Severity::None;
            self.text.clear();
        }
        !consistent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Decision {
    Manufacturer(ManufacturerDecision),
    Buyer(BuyerDecision),
    Fda(FdaDecision),
}

impl Decision {
    pub fn rationale(&self) -> &str {
        match self {
            Decision::Manufacturer(d) => &d.rationale,
            Decision::Buyer(d) => &d.rationale,
            Decision::Fda(d) => &d.rationale,
        }
    }

    pub fn fits(&self, role: &Role) -> bool {
        matches!(
            (self, role),
            (Decision::Manufacturer(_), Role::Manufacturer { .. })
                | (Decision::Buyer(_), Role::Buyer)
                | (Decision::Fda(_), Role::Fda)
        )
    }
}

/// A public FDA announcement as it enters the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdaSignal {
    pub period: u32,
    pub severity: Severity,
    pub text: String,
    pub urgency: Urgency,
}

impl FdaSignal {
    pub fn from_decision(period: u32, d: &FdaDecision) -> Option<Self> {
        (d.announce && d.severity != Severity::None).then(|| FdaSignal {
            period,
            severity: d.severity,
            text: d.text.clone(),
            urgency: d.severity.urgency(),
        })
    }

    pub fn is_intervention(&self) -> bool {
        self.severity != Severity::None
    }
}
