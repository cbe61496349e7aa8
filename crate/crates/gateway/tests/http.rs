use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tower::ServiceExt;

use jagarin_core::ace::{AceError, AgentCard, Category};
use jagarin_core::aria::{header, Routed};
use jagarin_core::engine::{EngineConfig, Zone};
use jagarin_core::gen::three_zone_registry;
use jagarin_core::notify::{MemorySink, PushKind};
use jagarin_gateway::*;

fn now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 2, 1, 12, 0, 0).unwrap()
}

fn fixture(p: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::read_to_string(root.join(p)).unwrap()
}

struct Harness {
    app: Router,
    sink: MemorySink,
    state: AppState,
}

fn harness(gateway: Gateway) -> Harness {
    let sink = MemorySink::new();
    let state = AppState::new(gateway)
        .with_sink(Arc::new(sink.clone()))
        .with_clock(Clock::Fixed(now()));
    Harness {
        app: router(state.clone()),
        sink,
        state,
    }
}

impl Harness {
    async fn call(&self, method: Method, uri: &str, body: impl Into<String>) -> (StatusCode, Vec<u8>, Option<String>) {
        let req = Request::builder().method(method).uri(uri).body(Body::from(body.into())).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let ctype = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_owned());
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes, ctype)
    }

    /// Calls and parses the body, asserting the status.
    async fn json<T: DeserializeOwned>(&self, method: Method, uri: &str, body: impl Into<String>, want: StatusCode) -> T {
        let (status, bytes, _) = self.call(method, uri, body).await;
        assert_eq!(status, want, "{}", String::from_utf8_lossy(&bytes));
        serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&bytes)))
    }
}

#[tokio::test]
async fn golden_envelope_end_to_end() {
    let h = harness(Gateway::default());
    let golden = fixture("ace/golden_temporal.json");
    let r: IngestResponse = h.json(Method::POST, "/ace/ingest", golden.clone(), StatusCode::OK).await;
    assert_eq!(r.outcome, IngestOutcome::Registered);
    let id = r.duty_id.unwrap();
    assert_eq!(id.as_str(), "ace-sf-2026-0001");
    assert_eq!(h.sink.events()[0].kind, PushKind::DutyRegistered);

    let list: Vec<DutyView> = h.json(Method::GET, "/duties", "", StatusCode::OK).await;
    assert_eq!(list.len(), 1);
    assert_eq!(list[0].duty.id, id);

    let body = json!({"outcome": "Responded", "fired_zone": "NUDGE", "score": 0.7}).to_string();
    let th: ThresholdsResponse = h
        .json(Method::POST, &format!("/duties/{id}/interaction"), body, StatusCode::OK)
        .await;
    // theta1 <- 0.95 * 0.35 + 0.05 * 0.7
    assert!((th.theta1 - 0.3675).abs() < 1e-12, "{th:?}");
    assert_eq!(th.theta2, 0.60);

    // a retry of the same message id changes nothing
    let again: IngestResponse = h.json(Method::POST, "/ace/ingest", golden, StatusCode::OK).await;
    assert_eq!((again.outcome, again.duty_id), (IngestOutcome::Duplicate, Some(id)));
    assert_eq!(h.state.with_gateway(|g| g.registry().len()), 1);
    assert_eq!(h.sink.len(), 1);
}

#[tokio::test]
async fn ingest_errors() {
    let h = harness(Gateway::default());
    let mut env: Value = serde_json::from_str(&fixture("ace/golden_temporal.json")).unwrap();
    env.as_object_mut().unwrap().remove("ace_trust");
    let errs: ValidationErrors = h.json(Method::POST, "/ace/ingest", env.to_string(), StatusCode::BAD_REQUEST).await;
    assert_eq!(errs.errors, vec![AceError::MandatorySchemaMissing { schema: "ACE-TRUST".into() }]);

    let errs: ValidationErrors = h.json(Method::POST, "/ace/ingest", "{not json", StatusCode::BAD_REQUEST).await;
    assert!(matches!(errs.errors[..], [AceError::MalformedSyntax { .. }]));

    // every violation is listed, not just the first
    let bad = fixture("ace/financial.invalid.json");
    let errs: ValidationErrors = h.json(Method::POST, "/ace/ingest", bad, StatusCode::BAD_REQUEST).await;
    let want: Vec<AceError> = serde_json::from_str(&fixture("ace/financial.invalid.expected.json")).unwrap();
    assert_eq!(errs.errors, want);

    // deadline already behind the receipt time
    let late: MappingFailure = h
        .json(Method::POST, "/ace/ingest?at=2026-06-01T00:00:00Z", fixture("ace/golden_temporal.json"), StatusCode::UNPROCESSABLE_ENTITY)
        .await;
    assert!(late.reason.contains("deadline"), "{}", late.reason);
    assert!(h.sink.is_empty());
}

#[tokio::test]
async fn social_envelope_is_not_a_duty() {
    let h = harness(Gateway::default());
    let mut env: Value = serde_json::from_str(&fixture("ace/golden_temporal.json")).unwrap();
    env["category"] = json!("SocialPlatformUpdate");
    env["message_id"] = json!("soc-1");
    let r: IngestResponse = h.json(Method::POST, "/ace/ingest", env.to_string(), StatusCode::OK).await;
    assert_eq!((r.category, r.outcome, r.duty_id), (Category::SocialPlatformUpdate, IngestOutcome::NotADuty, None));
    assert!(h.sink.is_empty());
}

#[tokio::test]
async fn agent_card_is_stable() {
    let h = harness(Gateway::default());
    let (s1, a, ctype) = h.call(Method::GET, "/ace/.well-known/agent.json", "").await;
    let (_, b, _) = h.call(Method::GET, "/ace/.well-known/agent.json", "").await;
    assert_eq!(s1, StatusCode::OK);
    assert_eq!(a, b);
    assert_eq!(ctype.as_deref(), Some("application/json"));
    let card: AgentCard = serde_json::from_slice(&a).unwrap();
    assert_eq!(card.extensions.len(), 11);
    assert_eq!(card.ingest_path, "/ace/ingest");
}

#[tokio::test]
async fn three_zone_listing_and_filter() {
    let h = harness(Gateway::from_registry(three_zone_registry(now()), EngineConfig::default()));
    let all: Vec<DutyView> = h.json(Method::GET, "/duties", "", StatusCode::OK).await;
    let zones: Vec<Zone> = all.iter().map(|v| v.decision.zone).collect();
    assert_eq!(zones, [Zone::Sleep, Zone::Nudge, Zone::ActNow]);

    let act: Vec<DutyView> = h.json(Method::GET, "/duties?state=ACT_NOW", "", StatusCode::OK).await;
    assert_eq!(act.len(), 1);
    assert_eq!(act[0].duty.id.as_str(), "insurance-renewal");

    let (status, _, _) = h.call(Method::GET, "/duties?state=LATER", "").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = h.call(Method::GET, "/duties?hour=25", "").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // a settled evening context only raises scores
    let eve: Vec<DutyView> = h
        .json(Method::GET, "/duties?hour=20&charging=true&wifi=true", "", StatusCode::OK)
        .await;
    for (a, b) in all.iter().zip(&eve) {
        assert!(b.decision.score >= a.decision.score);
    }

    let empty = harness(Gateway::default());
    let none: Vec<DutyView> = empty.json(Method::GET, "/duties", "", StatusCode::OK).await;
    assert!(none.is_empty());
}

#[tokio::test]
async fn interaction_examples() {
    let h = harness(Gateway::from_registry(three_zone_registry(now()), EngineConfig::default()));
    let (status, body, _) = h
        .call(Method::POST, "/duties/nope/interaction", json!({"outcome": "Ignored", "fired_zone": "NUDGE", "score": 0.5}).to_string())
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let _: ErrorBody = serde_json::from_slice(&body).unwrap();

    // SLEEP never fires, so it cannot be an interaction
    let (status, _, _) = h
        .call(Method::POST, "/duties/insurance-renewal/interaction", json!({"outcome": "Ignored", "fired_zone": "SLEEP", "score": 0.5}).to_string())
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // ignored ACT_NOW pushes theta2 up until it sits on the ceiling
    let mut last = ThresholdsResponse { theta1: 0.0, theta2: 0.0 };
    for _ in 0..400 {
        last = h
            .json(
                Method::POST,
                "/duties/insurance-renewal/interaction",
                json!({"outcome": "Ignored", "fired_zone": "ACT_NOW", "score": 0.9}).to_string(),
                StatusCode::OK,
            )
            .await;
    }
    assert!((last.theta2 - 0.75).abs() < 1e-6, "{last:?}");
    let once_more: ThresholdsResponse = h
        .json(
            Method::POST,
            "/duties/insurance-renewal/interaction",
            json!({"outcome": "Ignored", "fired_zone": "ACT_NOW", "score": 0.9}).to_string(),
            StatusCode::OK,
        )
        .await;
    assert!(once_more.theta2 <= 0.75);
}

fn corpus() -> Vec<(String, String, Value)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/aria");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".txt"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let stem = n.trim_end_matches(".txt").to_owned();
            let want = serde_json::from_str(&fixture(&format!("aria/{stem}.expected.json"))).unwrap();
            (stem, fixture(&format!("aria/{n}")), want)
        })
        .collect()
}

#[tokio::test]
async fn aria_corpus_over_http() {
    let ppm = serde_json::from_str(&fixture("aria/purchases.json")).unwrap();
    let h = harness(Gateway::default().with_purchases(ppm));
    for (name, text, want) in corpus() {
        let bep = header(&text, "X-Engagement").unwrap_or_else(|| "0.5".into());
        let before = h.sink.len();
        let r: Routed = h
            .json(Method::POST, &format!("/aria/inbound?bep={bep}&at=2026-02-01T09:00:00Z"), text, StatusCode::OK)
            .await;
        assert_eq!(r.category.name(), want["category"], "{name}");
        assert_eq!(r.action, want["action"], "{name}");
        let emitted = h.sink.len() - before;
        match r.action.as_str() {
            "RegisterDuty" | "StoreAndNotifyLowPriority" | "NotifyOnly" => assert_eq!(emitted, 1, "{name}"),
            _ => assert_eq!(emitted, 0, "{name}"),
        }
    }
    assert_eq!(h.state.with_gateway(|g| g.registry().len()), 14);

    let (status, _, _) = h.call(Method::POST, "/aria/inbound", "Subject: no sender\n\nhi").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = h.call(Method::POST, "/aria/inbound?bep=2", fixture("aria/social_01.txt")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_ingest_registers_each_message() {
    let h = harness(Gateway::default());
    let golden: Value = serde_json::from_str(&fixture("ace/golden_temporal.json")).unwrap();
    let tasks: Vec<_> = (0..32)
        .map(|i| {
            let app = h.app.clone();
            let mut env = golden.clone();
            env["message_id"] = json!(format!("m-{i}"));
            tokio::spawn(async move {
                let req = Request::post("/ace/ingest").body(Body::from(env.to_string())).unwrap();
                app.oneshot(req).await.unwrap().status()
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    assert_eq!(h.state.with_gateway(|g| g.registry().len()), 32);
    assert_eq!(h.sink.len(), 32);
}

fn reopen(dir: &Path) -> Harness {
    harness(Gateway::open(dir, EngineConfig::default()).unwrap())
}

#[tokio::test]
async fn state_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let h = reopen(&store);
    let r: IngestResponse = h
        .json(Method::POST, "/ace/ingest", fixture("ace/golden_temporal.json"), StatusCode::OK)
        .await;
    let id = r.duty_id.unwrap();
    let th: ThresholdsResponse = h
        .json(
            Method::POST,
            &format!("/duties/{id}/interaction"),
            json!({"outcome": "Responded", "fired_zone": "NUDGE", "score": 0.7}).to_string(),
            StatusCode::OK,
        )
        .await;
    drop(h);

    let h = reopen(&store);
    let list: Vec<DutyView> = h.json(Method::GET, "/duties", "", StatusCode::OK).await;
    assert_eq!(list.len(), 1);
    assert_eq!(list[0].thresholds.theta1, th.theta1);
    // duplicate detection holds across restarts
    let again: IngestResponse = h
        .json(Method::POST, "/ace/ingest", fixture("ace/golden_temporal.json"), StatusCode::OK)
        .await;
    assert_eq!(again.outcome, IngestOutcome::Duplicate);
    assert!(h.sink.is_empty());
}
