//! Duty domain types: what the agent is tracking and how its value evolves.

mod registry;
pub mod store;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::Zone;
use crate::scalar::Scalar;

pub use registry::{LogEntry, Registry, RegistryError, RegistrySnapshot, EXPIRY_GRACE_DAYS};

/// The twelve built-in obligation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DutyType {
    InsuranceRenewal,
    PrescriptionRefill,
    WellnessVisit,
    SubscriptionRenewal,
    VehicleService,
    ReturnDeadline,
    LicenseRenewal,
    SupportFollowUp,
    TaxDeadline,
    TravelCheckIn,
    Custom,
    BopisPickup,
}

impl DutyType {
    pub const ALL: [DutyType; 12] = [
        DutyType::InsuranceRenewal,
        DutyType::PrescriptionRefill,
        DutyType::WellnessVisit,
        DutyType::SubscriptionRenewal,
        DutyType::VehicleService,
        DutyType::ReturnDeadline,
        DutyType::LicenseRenewal,
        DutyType::SupportFollowUp,
        DutyType::TaxDeadline,
        DutyType::TravelCheckIn,
        DutyType::Custom,
        DutyType::BopisPickup,
    ];

    /// Default curve for this duty type. Only `BopisPickup` is a step.
    pub fn default_toc<T: Scalar>(self) -> TocParams<T> {
        let g = |mu: f64, pre: f64, post: f64| TocParams::gaussian(T::lit(mu), T::lit(pre), T::lit(post));
        match self {
            DutyType::InsuranceRenewal => g(30.0, 12.0, 7.0),
            DutyType::PrescriptionRefill => g(14.0, 10.0, 4.0),
            DutyType::WellnessVisit => g(21.0, 14.0, 14.0),
            DutyType::SubscriptionRenewal => g(7.0, 5.0, 3.0),
            DutyType::VehicleService => g(14.0, 10.0, 7.0),
            DutyType::ReturnDeadline => g(7.0, 4.0, 3.0),
            DutyType::LicenseRenewal => g(30.0, 14.0, 10.0),
            DutyType::SupportFollowUp => g(3.0, 2.0, 2.0),
            DutyType::TaxDeadline => g(21.0, 10.0, 5.0),
            DutyType::TravelCheckIn => g(1.0, 0.5, 0.5),
            DutyType::Custom => g(14.0, 7.0, 7.0),
            DutyType::BopisPickup => TocParams::step(T::lit(3.0)),
        }
    }

    /// Category tag used when nothing more specific is known.
    pub fn default_domain(self) -> &'static str {
        match self {
            DutyType::InsuranceRenewal => "insurance",
            DutyType::PrescriptionRefill | DutyType::WellnessVisit => "healthcare",
            DutyType::SubscriptionRenewal => "subscription",
            DutyType::VehicleService => "automotive",
            DutyType::ReturnDeadline | DutyType::BopisPickup => "retail",
            DutyType::LicenseRenewal | DutyType::TaxDeadline => "government",
            DutyType::SupportFollowUp => "support",
            DutyType::TravelCheckIn => "travel",
            DutyType::Custom => "other",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DutyType::InsuranceRenewal => "InsuranceRenewal",
            DutyType::PrescriptionRefill => "PrescriptionRefill",
            DutyType::WellnessVisit => "WellnessVisit",
            DutyType::SubscriptionRenewal => "SubscriptionRenewal",
            DutyType::VehicleService => "VehicleService",
            DutyType::ReturnDeadline => "ReturnDeadline",
            DutyType::LicenseRenewal => "LicenseRenewal",
            DutyType::SupportFollowUp => "SupportFollowUp",
            DutyType::TaxDeadline => "TaxDeadline",
            DutyType::TravelCheckIn => "TravelCheckIn",
            DutyType::Custom => "Custom",
            DutyType::BopisPickup => "BopisPickup",
        }
    }

    pub fn parse(s: &str) -> Option<DutyType> {
        DutyType::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for DutyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Gaussian,
    Step,
}

/// Shape of the temporal opportunity curve, in days-until-deadline space.
///
/// `t > mu_days` is the approach side (width `sigma_pre_days`), `t < mu_days`
/// the urgency side (width `sigma_post_days`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TocParams<T> {
    pub mu_days: T,
    pub sigma_pre_days: T,
    pub sigma_post_days: T,
    pub curve_kind: CurveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup_window_days: Option<T>,
}

impl<T: Scalar> TocParams<T> {
    pub fn gaussian(mu_days: T, sigma_pre_days: T, sigma_post_days: T) -> Self {
        TocParams {
            mu_days,
            sigma_pre_days,
            sigma_post_days,
            curve_kind: CurveKind::Gaussian,
            pickup_window_days: None,
        }
    }

    /// Cliff curve: full value while `0 <= t <= window`.
    pub fn step(pickup_window_days: T) -> Self {
        TocParams {
            mu_days: T::zero(),
            sigma_pre_days: T::one(),
            sigma_post_days: T::one(),
            curve_kind: CurveKind::Step,
            pickup_window_days: Some(pickup_window_days),
        }
    }

    pub fn is_step(&self) -> bool {
        self.curve_kind == CurveKind::Step
    }

    /// Returns the first violated invariant, if any.
    pub fn validate(&self) -> Result<(), String> {
        if !self.mu_days.is_finite() || self.mu_days < T::zero() {
            return Err("toc_params.mu_days must be finite and >= 0".into());
        }
        if !self.sigma_pre_days.is_finite() || self.sigma_pre_days <= T::zero() {
            return Err("toc_params.sigma_pre_days must be > 0".into());
        }
        if !self.sigma_post_days.is_finite() || self.sigma_post_days <= T::zero() {
            return Err("toc_params.sigma_post_days must be > 0".into());
        }
        if self.curve_kind == CurveKind::Step {
            match self.pickup_window_days {
                Some(w) if w.is_finite() && w >= T::zero() => {}
                Some(_) => return Err("toc_params.pickup_window_days must be >= 0".into()),
                None => return Err("step curve requires toc_params.pickup_window_days".into()),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DutyId(pub String);

impl DutyId {
    pub fn new(id: impl Into<String>) -> Self {
        DutyId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DutyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DutyId {
    fn from(s: &str) -> Self {
        DutyId(s.to_owned())
    }
}

/// Amount in minor currency units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Money {
    pub amount_minor: i64,
    pub currency: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DutySource {
    Manual,
    Aria,
    Ace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DutyStatus {
    Active,
    Completed,
    Expired,
}

/// One registered obligation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyRecord {
    pub id: DutyId,
    pub duty_type: DutyType,
    pub counterparty: String,
    pub counterparty_domain: String,
    pub deadline: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_number: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation_capability: Option<String>,
    pub toc_params: TocParams<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_estimate: Option<Money>,
    pub source: DutySource,
    pub created_at: DateTime<Utc>,
    pub status: DutyStatus,
}

impl DutyRecord {
    /// Active manual duty with the type's default curve and domain.
    pub fn new(
        id: impl Into<String>,
        duty_type: DutyType,
        counterparty: impl Into<String>,
        deadline: DateTime<Utc>,
        created_at: DateTime<Utc>,
    ) -> Self {
        DutyRecord {
            id: DutyId::new(id),
            duty_type,
            counterparty: counterparty.into(),
            counterparty_domain: duty_type.default_domain().to_owned(),
            deadline,
            reference_number: None,
            escalation_capability: None,
            toc_params: duty_type.default_toc(),
            value_estimate: None,
            source: DutySource::Manual,
            created_at,
            status: DutyStatus::Active,
        }
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.counterparty_domain = domain.into();
        self
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference_number = Some(reference.into());
        self
    }

    pub fn with_capability(mut self, capability: impl Into<String>) -> Self {
        self.escalation_capability = Some(capability.into());
        self
    }

    pub fn with_toc(mut self, params: TocParams<f64>) -> Self {
        self.toc_params = params;
        self
    }

    pub fn with_source(mut self, source: DutySource) -> Self {
        self.source = source;
        self
    }

    /// Fractional days from `now` until the deadline; negative once passed.
    pub fn days_until(&self, now: DateTime<Utc>) -> f64 {
        days_between(now, self.deadline)
    }

    /// Returns the violated invariants, empty when the record is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.0.trim().is_empty() {
            out.push("id must be non-empty".to_owned());
        }
        if self.deadline < self.created_at {
            out.push("deadline must not precede created_at".to_owned());
        }
        if self.counterparty_domain.trim().is_empty() {
            out.push("counterparty_domain must be non-empty".to_owned());
        }
        if let Err(e) = self.toc_params.validate() {
            out.push(e);
        }
        if self.status != DutyStatus::Active {
            out.push("new duties must be Active".to_owned());
        }
        out
    }
}

/// Signed fractional days from `from` to `to`.
pub fn days_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    (to - from).num_milliseconds() as f64 / 86_400_000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Responded,
    Ignored,
}

/// A delivered notification and what the user did with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub duty_id: DutyId,
    pub fired_zone: Zone,
    pub score_at_fire: f64,
    pub outcome: Outcome,
    pub at: DateTime<Utc>,
}

impl InteractionEvent {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.score_at_fire) {
            out.push("score_at_fire must lie in [0, 1]".to_owned());
        }
        if self.fired_zone == Zone::Sleep {
            out.push("fired_zone cannot be SLEEP".to_owned());
        }
        out
    }
}

/// Thresholds at the precision duty records use.
pub type DutyThresholds = Thresholds<f64>;

/// Per-duty adaptive zone boundaries `theta1 < theta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<T> {
    pub theta1: T,
    pub theta2: T,
    pub alpha: T,
}

impl<T: Scalar> Thresholds<T> {
    pub fn new(theta1: T, theta2: T, alpha: T) -> Self {
        Thresholds { theta1, theta2, alpha }
    }

    /// Starting point for a freshly registered duty: (0.35, 0.60), alpha 0.05.
    pub fn initial() -> Self {
        Thresholds::new(T::lit(0.35), T::lit(0.60), T::lit(0.05))
    }
}

impl<T: Scalar> Default for Thresholds<T> {
    fn default() -> Self {
        Self::initial()
    }
}
