use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DutyId, DutyRecord, DutyStatus, DutyThresholds, InteractionEvent};
use crate::canonical;
use crate::engine::{adapt_threshold, EngineConfig, ThresholdRule};
use crate::notify::PushEvent;

/// Days past the deadline a duty stays visible before it expires.
pub const EXPIRY_GRACE_DAYS: i64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("duty id {0} already registered")]
    DuplicateId(DutyId),
    #[error("invalid duty record: {}", .0.join("; "))]
    InvalidRecord(Vec<String>),
    #[error("unknown duty {0}")]
    UnknownDuty(DutyId),
    #[error("invalid interaction: {}", .0.join("; "))]
    InvalidEvent(Vec<String>),
    #[error("duty {id} cannot move from {from:?} to {to:?}")]
    IllegalTransition { id: DutyId, from: DutyStatus, to: DutyStatus },
}

/// One line of the append-only event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEntry {
    Registered {
        duty: DutyRecord,
        thresholds: DutyThresholds,
    },
    Interaction {
        interaction: InteractionEvent,
        thresholds: DutyThresholds,
    },
    StatusChanged {
        duty_id: DutyId,
        status: DutyStatus,
        at: DateTime<Utc>,
    },
    Push {
        push: PushEvent,
    },
}

/// Immutable view of the active duties at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub duties: Vec<DutyRecord>,
    pub thresholds: BTreeMap<DutyId, DutyThresholds>,
    pub taken_at: DateTime<Utc>,
}

impl RegistrySnapshot {
    pub fn new(duties: Vec<DutyRecord>, thresholds: BTreeMap<DutyId, DutyThresholds>, taken_at: DateTime<Utc>) -> Self {
        RegistrySnapshot {
            duties,
            thresholds,
            taken_at,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.duties.is_empty()
    }
}

/// Registry state as persisted: duties (all statuses), live thresholds, and the event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct RegistryState {
    pub duties: Vec<DutyRecord>,
    pub thresholds: BTreeMap<DutyId, DutyThresholds>,
}

/// Single-writer store of duties, their thresholds and the interaction log.
#[derive(Debug, Clone)]
pub struct Registry {
    state: RegistryState,
    log: Vec<LogEntry>,
    rule: ThresholdRule<f64>,
    initial: DutyThresholds,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new(&EngineConfig::default())
    }
}

impl Registry {
    pub fn new(cfg: &EngineConfig) -> Self {
        Registry {
            state: RegistryState::default(),
            log: Vec::new(),
            rule: cfg.threshold_rule(),
            initial: cfg.initial_thresholds(),
        }
    }

    pub fn register_duty(&mut self, record: DutyRecord) -> Result<DutyId, RegistryError> {
        let violations = record.violations();
        if !violations.is_empty() {
            return Err(RegistryError::InvalidRecord(violations));
        }
        if self.get(&record.id).is_some() {
            return Err(RegistryError::DuplicateId(record.id));
        }
        let entry = LogEntry::Registered {
            duty: record,
            thresholds: self.initial,
        };
        self.apply(&entry);
        let id = match &entry {
            LogEntry::Registered { duty, .. } => duty.id.clone(),
            _ => unreachable!(),
        };
        self.log.push(entry);
        Ok(id)
    }

    /// Appends the interaction and adapts the duty's thresholds.
    pub fn record_interaction(&mut self, event: InteractionEvent) -> Result<DutyThresholds, RegistryError> {
        let current = *self
            .state
            .thresholds
            .get(&event.duty_id)
            .ok_or_else(|| RegistryError::UnknownDuty(event.duty_id.clone()))?;
        let violations = event.violations();
        if !violations.is_empty() {
            return Err(RegistryError::InvalidEvent(violations));
        }
        let thresholds = adapt_threshold(&current, &event, &self.rule);
        let entry = LogEntry::Interaction {
            interaction: event,
            thresholds,
        };
        self.apply(&entry);
        self.log.push(entry);
        Ok(thresholds)
    }

    pub fn complete(&mut self, id: &DutyId, at: DateTime<Utc>) -> Result<(), RegistryError> {
        self.transition(id, DutyStatus::Completed, at)
    }

    fn transition(&mut self, id: &DutyId, to: DutyStatus, at: DateTime<Utc>) -> Result<(), RegistryError> {
        let duty = self.get(id).ok_or_else(|| RegistryError::UnknownDuty(id.clone()))?;
        if duty.status != DutyStatus::Active {
            return Err(RegistryError::IllegalTransition {
                id: id.clone(),
                from: duty.status,
                to,
            });
        }
        let entry = LogEntry::StatusChanged {
            duty_id: id.clone(),
            status: to,
            at,
        };
        self.apply(&entry);
        self.log.push(entry);
        Ok(())
    }

    /// Expires overdue duties, then copies out the active ones.
    pub fn snapshot(&mut self, now: DateTime<Utc>) -> RegistrySnapshot {
        let overdue: Vec<DutyId> = self
            .state
            .duties
            .iter()
            .filter(|d| d.status == DutyStatus::Active && d.deadline + Duration::days(EXPIRY_GRACE_DAYS) < now)
            .map(|d| d.id.clone())
            .collect();
        for id in overdue {
            self.transition(&id, DutyStatus::Expired, now).expect("overdue duty is active");
        }
        self.peek(now)
    }

    /// Copy of the active duties without expiring anything.
    pub fn peek(&self, now: DateTime<Utc>) -> RegistrySnapshot {
        let duties: Vec<DutyRecord> = self.active().cloned().collect();
        let thresholds = duties
            .iter()
            .filter_map(|d| self.state.thresholds.get(&d.id).map(|t| (d.id.clone(), *t)))
            .collect();
        RegistrySnapshot::new(duties, thresholds, now)
    }

    /// Logs a delivered push event.
    pub fn record_push(&mut self, push: PushEvent) {
        self.log.push(LogEntry::Push { push });
    }

    pub fn get(&self, id: &DutyId) -> Option<&DutyRecord> {
        self.state.duties.iter().find(|d| &d.id == id)
    }

    pub fn thresholds(&self, id: &DutyId) -> Option<DutyThresholds> {
        self.state.thresholds.get(id).copied()
    }

    pub fn duties(&self) -> &[DutyRecord] {
        &self.state.duties
    }

    pub fn active(&self) -> impl Iterator<Item = &DutyRecord> {
        self.state.duties.iter().filter(|d| d.status == DutyStatus::Active)
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.state.duties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.duties.is_empty()
    }

    /// Sorted-key JSON of duties, thresholds and the event log.
    pub fn canonical(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            duties: &'a [DutyRecord],
            thresholds: &'a BTreeMap<DutyId, DutyThresholds>,
            log: &'a [LogEntry],
        }
        canonical::to_string(&View {
            duties: &self.state.duties,
            thresholds: &self.state.thresholds,
            log: &self.log,
        })
        .expect("registry serializes")
    }

    pub(crate) fn state(&self) -> &RegistryState {
        &self.state
    }

    pub(crate) fn from_parts(cfg: &EngineConfig, state: RegistryState, log: Vec<LogEntry>) -> Self {
        Registry {
            state,
            log,
            ..Registry::new(cfg)
        }
    }

    /// Applies a logged state change without re-logging it.
    pub(crate) fn replay(&mut self, entry: LogEntry) {
        self.apply(&entry);
        self.log.push(entry);
    }

    fn apply(&mut self, entry: &LogEntry) {
        match entry {
            LogEntry::Registered { duty, thresholds } => {
                if self.get(&duty.id).is_none() {
                    self.state.thresholds.insert(duty.id.clone(), *thresholds);
                    self.state.duties.push(duty.clone());
                }
            }
            LogEntry::Interaction {
                interaction,
                thresholds,
            } => {
                if let Some(t) = self.state.thresholds.get_mut(&interaction.duty_id) {
                    *t = *thresholds;
                }
            }
            LogEntry::StatusChanged { duty_id, status, .. } => {
                if let Some(d) = self.state.duties.iter_mut().find(|d| &d.id == duty_id) {
                    if d.status == DutyStatus::Active {
                        d.status = *status;
                        if *status != DutyStatus::Active {
                            self.state.thresholds.remove(duty_id);
                        }
                    }
                }
            }
            LogEntry::Push { .. } => {}
        }
    }
}
