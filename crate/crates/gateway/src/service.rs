use std::path::PathBuf;

use chrono::{DateTime, Utc};
use thiserror::Error;

use jagarin_core::ace::{self, AceError, Codec, ToDutyError};
use jagarin_core::aria::{AriaRouter, InboundMessage, PurchasePatternModel, Routed};
use jagarin_core::duty::store::{Store, StoreError};
use jagarin_core::duty::{DutyId, InteractionEvent, Registry, RegistryError, RegistrySnapshot};
use jagarin_core::engine::{evaluate_cycle, EngineConfig, Zone};
use jagarin_core::notify::{EventSink, PushEvent, PushKind};
use jagarin_core::signals::{EngagementContext, EngagementHistory};

use crate::wire::{DutyView, IngestOutcome, IngestResponse, InteractionRequest, ThresholdsResponse};

/// Everything a request can fail with; the HTTP layer maps each to a status.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{} validation error(s)", .0.len())]
    Invalid(Vec<AceError>),
    #[error("mapping failure: {0}")]
    Mapping(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown duty {0}")]
    UnknownDuty(DutyId),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Registry, router and store behind the endpoints. Single writer: callers
/// serialize access (the HTTP layer holds it in a mutex).
pub struct Gateway {
    registry: Registry,
    router: AriaRouter,
    codec: Codec,
    engine: EngineConfig,
    store: Option<Store>,
}

impl Default for Gateway {
    fn default() -> Self {
        Gateway::in_memory(EngineConfig::default())
    }
}

impl Gateway {
    pub fn in_memory(engine: EngineConfig) -> Self {
        Gateway {
            registry: Registry::new(&engine),
            router: AriaRouter::default(),
            codec: Codec::default(),
            engine,
            store: None,
        }
    }

    /// Serves an existing registry without persisting it.
    pub fn from_registry(registry: Registry, engine: EngineConfig) -> Self {
        Gateway {
            registry,
            ..Gateway::in_memory(engine)
        }
    }

    /// Restores the registry from `dir`, creating the directory if needed.
    pub fn open(dir: impl Into<PathBuf>, engine: EngineConfig) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = Store::new(dir);
        let registry = store.restore(&engine)?;
        Ok(Gateway {
            registry,
            router: AriaRouter::default(),
            codec: Codec::default(),
            engine,
            store: Some(store),
        })
    }

    pub fn with_purchases(mut self, ppm: PurchasePatternModel) -> Self {
        self.router.ppm = ppm;
        self
    }

    pub fn with_codec(mut self, codec: Codec) -> Self {
        self.codec = codec;
        self
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn router(&self) -> &AriaRouter {
        &self.router
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    fn persist(&self) -> Result<(), StoreError> {
        match &self.store {
            Some(s) => s.persist(&self.registry),
            None => Ok(()),
        }
    }

    fn emit(&mut self, sink: &dyn EventSink, event: PushEvent) {
        self.registry.record_push(event.clone());
        sink.deliver(event);
    }

    /// decode -> validate -> map -> register. Re-ingesting a message id returns the original duty.
    pub fn ingest_ace(
        &mut self,
        text: &str,
        sink: &dyn EventSink,
        now: DateTime<Utc>,
    ) -> Result<IngestResponse, GatewayError> {
        let env = self.codec.decode(text).map_err(GatewayError::Invalid)?;
        let mut resp = IngestResponse {
            message_id: env.message_id.clone(),
            category: env.category,
            outcome: IngestOutcome::NotADuty,
            duty_id: None,
        };
        let duty = match ace::to_duty(&env, None, now) {
            Ok(d) => d,
            Err(ToDutyError::NotADuty(_)) => return Ok(resp),
            Err(ToDutyError::MappingFailure(r)) => return Err(GatewayError::Mapping(r)),
        };
        let body = format!("Tracking {} for {}", duty.duty_type.name(), duty.counterparty);
        match self.registry.register_duty(duty) {
            Ok(id) => {
                self.emit(sink, PushEvent::for_duty(PushKind::DutyRegistered, id.clone(), body, now));
                self.persist()?;
                resp.outcome = IngestOutcome::Registered;
                resp.duty_id = Some(id);
            }
            Err(RegistryError::DuplicateId(id)) => {
                resp.outcome = IngestOutcome::Duplicate;
                resp.duty_id = Some(id);
            }
            Err(e) => return Err(GatewayError::Mapping(e.to_string())),
        }
        Ok(resp)
    }

    /// classify -> route -> apply, with `bep` as the engagement estimate at ingest.
    pub fn route_inbound(
        &mut self,
        msg: &InboundMessage,
        bep: f64,
        sink: &dyn EventSink,
        now: DateTime<Utc>,
    ) -> Result<Routed, GatewayError> {
        if !(0.0..=1.0).contains(&bep) {
            return Err(GatewayError::BadRequest(format!("bep {bep} outside [0, 1]")));
        }
        let before = self.registry.log().len();
        let routed = self
            .router
            .dispatch(msg, &mut self.registry, sink, bep, now)
            .map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        if self.registry.log().len() != before {
            self.persist()?;
        }
        Ok(routed)
    }

    /// Expires overdue duties and copies out the active ones.
    pub fn snapshot(&mut self, now: DateTime<Utc>) -> Result<RegistrySnapshot, GatewayError> {
        let before = self.registry.log().len();
        let snap = self.registry.snapshot(now);
        if self.registry.log().len() != before {
            self.persist()?;
        }
        Ok(snap)
    }

    /// Scores the active duties against `ctx`, optionally keeping one zone.
    pub fn evaluate(
        &mut self,
        ctx: &EngagementContext,
        zone: Option<Zone>,
        now: DateTime<Utc>,
    ) -> Result<Vec<DutyView>, GatewayError> {
        let snap = self.snapshot(now)?;
        Ok(views(&snap, ctx, &self.engine, zone, now))
    }

    pub fn record_interaction(
        &mut self,
        id: &DutyId,
        req: &InteractionRequest,
        now: DateTime<Utc>,
    ) -> Result<ThresholdsResponse, GatewayError> {
        if self.registry.get(id).is_none() {
            return Err(GatewayError::UnknownDuty(id.clone()));
        }
        let event = InteractionEvent {
            duty_id: id.clone(),
            fired_zone: req.fired_zone,
            score_at_fire: req.score,
            outcome: req.outcome,
            at: req.at.unwrap_or(now),
        };
        let th = self.registry.record_interaction(event).map_err(|e| match e {
            RegistryError::UnknownDuty(id) => GatewayError::UnknownDuty(id),
            other => GatewayError::BadRequest(other.to_string()),
        })?;
        self.persist()?;
        Ok(th.into())
    }
}

/// Scores a snapshot. The gateway keeps no engagement history, so BEP runs on context alone.
pub fn views(
    snap: &RegistrySnapshot,
    ctx: &EngagementContext,
    engine: &EngineConfig,
    zone: Option<Zone>,
    now: DateTime<Utc>,
) -> Vec<DutyView> {
    let fallback = engine.initial_thresholds();
    evaluate_cycle(snap, ctx, &EngagementHistory::default(), engine, now)
        .into_iter()
        .zip(&snap.duties)
        .filter(|(d, _)| zone.is_none_or(|z| d.zone == z))
        .map(|(decision, duty)| DutyView {
            duty: duty.clone(),
            thresholds: *snap.thresholds.get(&duty.id).unwrap_or(&fallback),
            decision,
        })
        .collect()
}
