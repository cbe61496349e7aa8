//! HTTP ingest gateway.
//!
//! | method | path | body | success |
//! |---|---|---|---|
//! | POST | `/ace/ingest` | ACE wire text | [`IngestResponse`] |
//! | GET | `/ace/.well-known/agent.json` | | agent card |
//! | POST | `/aria/inbound?bep=` | inbound message (JSON or header text) | [`Routed`] |
//! | GET | `/duties?state=&hour=&charging=&wifi=&ignore_streak=&at=` | | `[`[`DutyView`]`]` |
//! | POST | `/duties/{id}/interaction` | [`InteractionRequest`] | [`ThresholdsResponse`] |
//!
//! Failures: 400 [`ValidationErrors`] for invalid envelopes, 422 [`MappingFailure`]
//! when an envelope cannot become a duty, 404/400/500 [`ErrorBody`] otherwise.
//! Every POST and `/duties` accept `?at=` (RFC 3339) in place of the wall clock.
//!
//! All mutations go through one [`Gateway`] behind a mutex and are persisted to
//! the store before the response is sent.

mod service;
pub mod wire;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use tokio::net::TcpListener;

use jagarin_core::ace::{agent_card, DISCOVERY_PATH, INGEST_PATH};
use jagarin_core::aria::{InboundMessage, Routed};
use jagarin_core::duty::DutyId;
use jagarin_core::notify::{EventSink, PushEvent};

pub use service::{views, Gateway, GatewayError};
pub use wire::*;

/// Where the gateway reads the time from.
#[derive(Debug, Clone, Copy)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => t,
        }
    }
}

/// Writes each push event to the log; stands in for device delivery.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogSink;

impl EventSink for LogSink {
    fn deliver(&self, event: PushEvent) {
        tracing::info!(
            kind = ?event.kind,
            duty_id = event.duty_id.as_ref().map(DutyId::as_str),
            body = %event.body,
            "push"
        );
    }
}

#[derive(Clone)]
pub struct AppState {
    gateway: Arc<Mutex<Gateway>>,
    sink: Arc<dyn EventSink>,
    clock: Clock,
    card: Arc<String>,
}

impl AppState {
    pub fn new(gateway: Gateway) -> Self {
        let card = agent_card(&gateway.codec().registry).to_canonical();
        AppState {
            gateway: Arc::new(Mutex::new(gateway)),
            sink: Arc::new(LogSink),
            clock: Clock::System,
            card: Arc::new(card),
        }
    }

    pub fn with_sink(mut self, sink: Arc<dyn EventSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Runs `f` with exclusive access to the gateway.
    pub fn with_gateway<R>(&self, f: impl FnOnce(&mut Gateway) -> R) -> R {
        let mut g = self.gateway.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut g)
    }

    fn now(&self, at: Option<DateTime<Utc>>) -> DateTime<Utc> {
        at.unwrap_or_else(|| self.clock.now())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route(INGEST_PATH, post(ingest_ace))
        .route(DISCOVERY_PATH, get(card))
        .route("/aria/inbound", post(aria_inbound))
        .route("/duties", get(duties))
        .route("/duties/{id}/interaction", post(interaction))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "gateway listening");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await
}

#[derive(Debug, Default, Deserialize)]
struct AtQuery {
    #[serde(default)]
    at: Option<DateTime<Utc>>,
    #[serde(default)]
    bep: Option<f64>,
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        match self {
            GatewayError::Invalid(errors) => (StatusCode::BAD_REQUEST, Json(ValidationErrors { errors })).into_response(),
            GatewayError::Mapping(reason) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(MappingFailure { reason })).into_response()
            }
            other => {
                let status = match other {
                    GatewayError::UnknownDuty(_) => StatusCode::NOT_FOUND,
                    GatewayError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
                    _ => StatusCode::BAD_REQUEST,
                };
                (status, Json(ErrorBody { error: other.to_string() })).into_response()
            }
        }
    }
}

async fn ingest_ace(
    State(s): State<AppState>,
    Query(q): Query<AtQuery>,
    body: String,
) -> Result<Json<IngestResponse>, GatewayError> {
    let now = s.now(q.at);
    let result = s.with_gateway(|g| g.ingest_ace(&body, s.sink.as_ref(), now));
    match &result {
        Ok(r) => tracing::info!(
            message_id = %r.message_id,
            category = r.category.name(),
            outcome = ?r.outcome,
            duty_id = r.duty_id.as_ref().map(DutyId::as_str),
            "ace ingest"
        ),
        Err(e) => tracing::info!(error = %e, "ace ingest rejected"),
    }
    result.map(Json)
}

async fn card(State(s): State<AppState>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], s.card.as_str().to_owned())
}

async fn aria_inbound(
    State(s): State<AppState>,
    Query(q): Query<AtQuery>,
    body: String,
) -> Result<Json<Routed>, GatewayError> {
    let msg = InboundMessage::parse(&body).map_err(GatewayError::BadRequest)?;
    let now = s.now(q.at);
    let routed = s.with_gateway(|g| g.route_inbound(&msg, q.bep.unwrap_or(0.5), s.sink.as_ref(), now))?;
    tracing::info!(
        sender = %msg.sender_domain,
        category = routed.category.name(),
        action = %routed.action,
        duty_id = routed.duty_id.as_ref().map(DutyId::as_str),
        "aria routed"
    );
    Ok(Json(routed))
}

async fn duties(State(s): State<AppState>, Query(q): Query<ContextParams>) -> Result<Json<Vec<DutyView>>, GatewayError> {
    let now = s.now(q.at);
    let ctx = q.context(now).map_err(GatewayError::BadRequest)?;
    let zone = q.zone().map_err(GatewayError::BadRequest)?;
    // Take the snapshot under the lock; score outside it.
    let (snap, engine) = s.with_gateway(|g| g.snapshot(now).map(|snap| (snap, g.engine().clone())))?;
    Ok(Json(views(&snap, &ctx, &engine, zone, now)))
}

async fn interaction(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<ThresholdsResponse>, GatewayError> {
    let req: InteractionRequest =
        serde_json::from_str(&body).map_err(|e| GatewayError::BadRequest(format!("malformed interaction: {e}")))?;
    let now = s.now(req.at);
    s.with_gateway(|g| g.record_interaction(&DutyId::new(id), &req, now)).map(Json)
}
