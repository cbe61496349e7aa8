use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde_json::Value;

use jagarin_core::ace::{self, Codec, BUILTIN_EXTENSIONS};
use jagarin_core::aria::{header, AriaRouter, InboundMessage, PurchasePatternModel};
use jagarin_core::duty::{DutyRecord, Registry};
use jagarin_core::notify::MemorySink;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(fixtures().join(p)).unwrap()
}

#[test]
fn ace_vectors_per_extension() {
    let codec = Codec::default();
    for (domain, _) in BUILTIN_EXTENSIONS {
        let name = domain.to_lowercase();
        let env = codec
            .decode(&read(format!("ace/{name}.valid.json")))
            .unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let canonical = read(format!("ace/{name}.valid.canonical"));
        assert_eq!(codec.encode(&env).unwrap(), canonical, "{name}");
        assert_eq!(codec.decode(&canonical).unwrap(), env);

        let errs = codec.decode(&read(format!("ace/{name}.invalid.json"))).unwrap_err();
        let want: Value = serde_json::from_str(&read(format!("ace/{name}.invalid.expected.json"))).unwrap();
        assert_eq!(serde_json::to_value(&errs).unwrap(), want, "{name}");
    }
}

#[test]
fn golden_temporal_maps_to_expected_duty() {
    let env = ace::decode(&read("ace/golden_temporal.json")).unwrap();
    let expected: Value = serde_json::from_str(&read("ace/golden_temporal.expected.json")).unwrap();
    let at: DateTime<Utc> = expected["received_at"].as_str().unwrap().parse().unwrap();
    let duty = ace::to_duty(&env, None, at).unwrap();
    let want: DutyRecord = serde_json::from_value(expected["duty"].clone()).unwrap();
    assert_eq!(duty, want);
}

fn corpus() -> Vec<(String, String, Value)> {
    let mut names: Vec<String> = fs::read_dir(fixtures().join("aria"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".txt"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let stem = n.trim_end_matches(".txt").to_owned();
            let text = read(format!("aria/{n}"));
            let want = serde_json::from_str(&read(format!("aria/{stem}.expected.json"))).unwrap();
            (stem, text, want)
        })
        .collect()
}

#[test]
fn aria_corpus_matches_labels() {
    let ppm: PurchasePatternModel = serde_json::from_str(&read("aria/purchases.json")).unwrap();
    let corpus = corpus();
    assert_eq!(corpus.len(), 40);
    let mut router = AriaRouter::new(ppm);
    let mut registry = Registry::default();
    for (name, text, want) in corpus {
        let msg = InboundMessage::parse(&text).unwrap();
        let bep = header(&text, "X-Engagement").map_or(0.5, |v| v.parse().unwrap());
        let sink = MemorySink::new();
        let routed = router.dispatch(&msg, &mut registry, &sink, bep, msg.received_at).unwrap();
        assert_eq!(routed.category.name(), want["category"], "{name}");
        assert_eq!(routed.action, want["action"], "{name}");
        match routed.action.as_str() {
            "RegisterDuty" => assert!(routed.duty_id.is_some() && sink.len() == 1, "{name}"),
            "StoreAndNotifyLowPriority" | "NotifyOnly" => assert_eq!(sink.len(), 1, "{name}"),
            _ => assert!(sink.is_empty(), "{name} emitted {:?}", sink.events()),
        }
    }
    assert_eq!(registry.len(), 14);
    assert_eq!(router.review_queue.len(), 1);
}
