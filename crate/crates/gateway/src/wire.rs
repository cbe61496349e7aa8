//! Request and response bodies. Every 2xx body deserializes back into these types.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use jagarin_core::ace::{AceError, Category};
use jagarin_core::duty::{DutyId, DutyRecord, DutyThresholds, Outcome};
use jagarin_core::engine::{WakeDecision, Zone};
use jagarin_core::signals::EngagementContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestOutcome {
    Registered,
    /// The message id was seen before; the original duty is returned.
    Duplicate,
    NotADuty,
}

/// `POST /ace/ingest` success body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub message_id: String,
    pub category: Category,
    pub outcome: IngestOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty_id: Option<DutyId>,
}

/// `POST /ace/ingest` 400 body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationErrors {
    pub errors: Vec<AceError>,
}

/// `POST /ace/ingest` 422 body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingFailure {
    pub reason: String,
}

/// Body of every other error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// One row of `GET /duties`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyView {
    pub duty: DutyRecord,
    pub thresholds: DutyThresholds,
    pub decision: WakeDecision,
}

/// `POST /duties/{id}/interaction` request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRequest {
    pub outcome: Outcome,
    pub fired_zone: Zone,
    pub score: f64,
    #[serde(default)]
    pub at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsResponse {
    pub theta1: f64,
    pub theta2: f64,
}

impl From<DutyThresholds> for ThresholdsResponse {
    fn from(t: DutyThresholds) -> Self {
        ThresholdsResponse {
            theta1: t.theta1,
            theta2: t.theta2,
        }
    }
}

/// Engagement context as query parameters; anything absent is neutral.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextParams {
    /// Zone filter.
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub hour: Option<u8>,
    #[serde(default)]
    pub charging: Option<bool>,
    #[serde(default)]
    pub wifi: Option<bool>,
    #[serde(default)]
    pub ignore_streak: Option<u32>,
    #[serde(default)]
    pub hours_since_open: Option<f64>,
    #[serde(default)]
    pub at: Option<DateTime<Utc>>,
}

impl ContextParams {
    pub fn context(&self, now: DateTime<Utc>) -> Result<EngagementContext, String> {
        let mut ctx = EngagementContext::neutral(now, 0);
        if let Some(h) = self.hour {
            if h > 23 {
                return Err(format!("hour {h} out of range 0..=23"));
            }
            ctx.hour = h;
        }
        ctx.charging = self.charging.unwrap_or(false);
        ctx.wifi = self.wifi.unwrap_or(false);
        ctx.ignore_streak = self.ignore_streak.unwrap_or(0);
        if let Some(h) = self.hours_since_open {
            if !(h.is_finite() && h >= 0.0) {
                return Err(format!("hours_since_open {h} must be a non-negative number"));
            }
            ctx.hours_since_last_open = h;
        }
        Ok(ctx)
    }

    pub fn zone(&self) -> Result<Option<Zone>, String> {
        self.state
            .as_deref()
            .map(|s| Zone::parse(s).ok_or_else(|| format!("unknown zone {s:?}")))
            .transpose()
    }
}
