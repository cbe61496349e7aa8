//! Push events and the sink they are delivered to.

use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::duty::DutyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PushKind {
    DutyRegistered,
    Nudge,
    ActNow,
    LowPriorityOffer,
    SocialNotify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub kind: PushKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty_id: Option<DutyId>,
    pub body: String,
    pub at: DateTime<Utc>,
}

impl PushEvent {
    pub fn for_duty(kind: PushKind, duty_id: DutyId, body: impl Into<String>, at: DateTime<Utc>) -> Self {
        PushEvent {
            kind,
            duty_id: Some(duty_id),
            body: body.into(),
            at,
        }
    }

    /// Offer and social events never reference a duty.
    pub fn general(kind: PushKind, body: impl Into<String>, at: DateTime<Utc>) -> Self {
        PushEvent {
            kind,
            duty_id: None,
            body: body.into(),
            at,
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self.kind, PushKind::LowPriorityOffer | PushKind::SocialNotify) || self.duty_id.is_none()
    }
}

/// Delivery transport for push events.
pub trait EventSink: Send + Sync {
    fn deliver(&self, event: PushEvent);
}

/// Keeps every delivered event in memory.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    events: Arc<Mutex<Vec<PushEvent>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<PushEvent> {
        self.events.lock().expect("sink poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.events.lock().expect("sink poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl EventSink for MemorySink {
    fn deliver(&self, event: PushEvent) {
        self.events.lock().expect("sink poisoned").push(event);
    }
}

/// Drops everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl EventSink for NullSink {
    fn deliver(&self, _event: PushEvent) {}
}
