use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use serde_json::Value;

use jagarin_core::duty::{store, DutyRecord};
use jagarin_core::gen::three_zone_registry;
use jagarin_core::sim::SimMetrics;
use jagarin_gateway::DutyView;

const AT: &str = "2026-02-01T12:00:00Z";

fn fixture(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(p)
}

fn jagarin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jagarin"))
        .args(args)
        .env_remove("JAGARIN_STORE")
        .env_remove("JAGARIN_PORT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn three_zone_store() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let now = Utc.with_ymd_and_hms(2026, 2, 1, 12, 0, 0).unwrap();
    store::persist(&three_zone_registry(now), dir.path()).unwrap();
    dir
}

#[test]
fn evaluate_three_zone_store() {
    let dir = three_zone_store();
    let s = dir.path().to_str().unwrap();
    let o = jagarin(&["evaluate", "--store", s, "--at", AT]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let zones: Vec<&str> = text.lines().skip(1).map(|l| l.split_whitespace().nth(10).unwrap()).collect();
    assert_eq!(zones, ["SLEEP", "NUDGE", "ACT_NOW"], "{text}");
    assert!(text.contains("UrgencyFloor"));

    let o = jagarin(&["evaluate", "--store", s, "--at", AT, "--format", "structured"]);
    let rows: Vec<DutyView> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 3);
    // same inputs, same bytes
    assert_eq!(o.stdout, jagarin(&["evaluate", "--store", s, "--at", AT, "--format", "structured"]).stdout);
}

#[test]
fn evaluate_empty_and_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let o = jagarin(&["evaluate", "--store", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "no active duties");

    let dir = three_zone_store();
    let snap = dir.path().join(store::SNAPSHOT_FILE);
    let text = std::fs::read_to_string(&snap).unwrap();
    std::fs::write(&snap, &text[..text.len() / 2]).unwrap();
    let o = jagarin(&["evaluate", "--store", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CorruptStore"), "{}", stderr(&o));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json");
    let run = |out: &str| {
        let out = dir.path().join(out);
        let o = jagarin(&[
            "simulate", "--scenario", scenario.to_str().unwrap(), "--seed", "7", "--users", "25", "--days", "60",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("fixed_interval:7,3,1"));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["report.txt", "metrics.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: SimMetrics = serde_json::from_slice(&std::fs::read(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!((m.seed, m.n_users, m.policies.len()), (7, 25, 3));
}

#[test]
fn simulate_rejects_bad_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(jagarin_core::sim::DEFAULT_SCENARIO).unwrap();
    v["policies"] = serde_json::json!(["dawn", "weekly"]);
    let p = dir.path().join("bad.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let o = jagarin(&["simulate", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weekly"), "{}", stderr(&o));
    let o = jagarin(&["simulate", "--scenario", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ace_commands() {
    let golden = fixture("ace/golden_temporal.json");
    let o = jagarin(&["ace", "validate", golden.to_str().unwrap()]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "valid"));

    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("ace_temp");
    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, v.to_string()).unwrap();
    let o = jagarin(&["ace", "validate", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("ACE-TEMP"), "{}", stdout(&o));

    let o = jagarin(&["ace", "validate", fixture("ace/travel.invalid.json").to_str().unwrap(), "--format", "structured"]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let want: Value = serde_json::from_str(&std::fs::read_to_string(fixture("ace/travel.invalid.expected.json")).unwrap()).unwrap();
    assert_eq!(report["errors"], want);

    let o = jagarin(&["ace", "to-duty", golden.to_str().unwrap(), "--at", "2026-01-09T00:00:00Z"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let duty: DutyRecord = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(duty.reference_number.as_deref(), Some("POL-98234"));

    v = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
    v["category"] = "SocialPlatformUpdate".into();
    let social = dir.path().join("social.json");
    std::fs::write(&social, v.to_string()).unwrap();
    let o = jagarin(&["ace", "to-duty", social.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("NotADuty"), "{}", stdout(&o));

    assert_eq!(jagarin(&["ace", "validate", "/nonexistent"]).status.code(), Some(2));
}

#[test]
fn aria_commands() {
    let o = jagarin(&["aria", "classify", fixture("aria/commercial_01.txt").to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "CommercialOpportunity");

    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let s = store.to_str().unwrap();
    let o = jagarin(&["aria", "route", fixture("aria/temporal_01.txt").to_str().unwrap(), "--store", s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("duty registered"), "{}", stdout(&o));
    assert!(stdout(&o).contains("push DutyRegistered"));

    let purchases = fixture("aria/purchases.json");
    let o = jagarin(&[
        "aria", "route", fixture("aria/commercial_06.txt").to_str().unwrap(), "--store", s, "--purchases",
        purchases.to_str().unwrap(),
    ]);
    let text = stdout(&o);
    assert!(text.contains("archived (silent)"), "{text}");
    assert!(!text.contains("push"), "{text}");

    // the registered duty is in the store
    let o = jagarin(&["evaluate", "--store", s, "--at", "2026-02-01T09:00:00Z", "--format", "structured"]);
    let rows: Vec<DutyView> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 1);
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[test]
fn serve_and_port_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("not-yet");
    let port = free_port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_jagarin"))
            .args(["serve", "--store", store.to_str().unwrap()])
            .env("JAGARIN_PORT", port.to_string())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(20);
    let resp = loop {
        if let Some(r) = get(port, "/ace/.well-known/agent.json") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"ingest_path\":\"/ace/ingest\""));
    assert!(store.is_dir());

    let o = jagarin(&["serve", "--port", &port.to_string(), "--store", store.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot bind"), "{}", stderr(&o));
}
