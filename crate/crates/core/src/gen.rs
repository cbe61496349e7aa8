//! Seeded generators of well-formed synthetic inputs, for fuzzing and load.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::ace::{
    AceEnvelope, AceScope, AceTemp, AceTrust, AceValue, Category, Extension, Sender, UrgencyClass, ACE_VERSION,
    BUILTIN_EXTENSIONS,
};
use crate::aria::InboundMessage;
use crate::duty::{DutyRecord, DutyType, Registry, TocParams};

const WORDS: &[&str] = &[
    "renew", "renews", "expires", "due", "pick up", "return by", "sale", "% off", "offer", "deal", "points", "miles",
    "tier", "balance", "followers", "mentioned", "community", "policy", "order", "ref #", "March 10, 2026",
    "2026-04-01", "in 5 days", "June 1", "$12.00", "$3.50", "1,200", "your", "the", "account", "refill", "coffee",
    "shoes", "weekend", "tomorrow", "soon", "thanks", "hello", "ticket", "appointment",
];

const DOMAINS: &[&str] = &[
    "statefarm.example", "cvs.example", "target.example", "beanery.example", "social.example", "shop.example",
    "united.example", "x.example",
];

/// A message stitched together from routing-relevant fragments.
pub fn message(rng: &mut impl Rng, received_at: DateTime<Utc>) -> InboundMessage {
    let mut words = |n: usize| -> String {
        (0..n)
            .map(|_| match rng.random_range(0..6) {
                0 => rng.random_range(0..10_000u32).to_string(),
                _ => (*WORDS.choose(rng).unwrap()).to_owned(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let subject = words(3);
    let body = words(12);
    let domain = *DOMAINS.choose(rng).unwrap();
    InboundMessage {
        sender_address: format!("notices@{domain}"),
        sender_domain: domain.to_owned(),
        subject,
        body_text: body,
        received_at,
    }
}

fn token(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

/// A valid envelope on a random built-in extension.
pub fn envelope(rng: &mut impl Rng, now: DateTime<Utc>) -> AceEnvelope {
    let secs = |rng: &mut dyn rand::RngCore, lo: i64, hi: i64| Duration::seconds(rng.random_range(lo..=hi));
    let deadline = now + secs(rng, 3_600, 200 * 86_400);
    let end = deadline - secs(rng, 0, 40 * 86_400);
    let start = end - secs(rng, 0, 40 * 86_400);
    let (domain, key) = *BUILTIN_EXTENSIONS.choose(rng).unwrap();
    let mut payload: BTreeMap<String, Value> = BTreeMap::new();
    payload.insert(key.to_owned(), json!(token(rng, 6)));
    if rng.random_bool(0.5) {
        payload.insert("reference_number".into(), json!(format!("REF-{}", rng.random_range(1..99_999))));
    }
    if rng.random_bool(0.3) {
        payload.insert("nested".into(), json!({"n": rng.random_range(0..100), "tags": [token(rng, 3)]}));
    }
    let disclosed = rng.random_bool(0.3);
    let mut extra = BTreeMap::new();
    if rng.random_bool(0.2) {
        extra.insert(format!("x_{}", token(rng, 4)), json!(token(rng, 5)));
    }
    AceEnvelope {
        ace_version: ACE_VERSION.to_owned(),
        message_id: format!("{}-{}", token(rng, 4), rng.random::<u32>()),
        sender: Sender {
            institution_name: format!("Inst {}", token(rng, 5)),
            domain_tag: token(rng, 7),
        },
        category: *Category::ALL.choose(rng).unwrap(),
        ace_temp: AceTemp {
            deadline,
            optimal_window_start: start,
            optimal_window_end: end,
            urgency_class: *[UrgencyClass::Low, UrgencyClass::Normal, UrgencyClass::High, UrgencyClass::Critical]
                .choose(rng)
                .unwrap(),
        },
        ace_value: AceValue {
            amount_minor: rng.random_range(0..1_000_000),
            currency: ["USD", "EUR", "GBP", "JPY"].choose(rng).unwrap().to_string(),
            benefit_type: token(rng, 8),
            return_rule: rng.random_bool(0.3).then(|| token(rng, 10)),
        },
        ace_scope: AceScope {
            permitted_actions: (0..rng.random_range(0..4)).map(|_| token(rng, 5)).collect(),
            requires_approval_above_minor: rng.random_bool(0.3).then(|| rng.random_range(0..100_000)),
        },
        ace_trust: AceTrust {
            affiliate_disclosure: (disclosed || rng.random_bool(0.2)).then(|| token(rng, 12)),
            commission_disclosed: disclosed,
            recommendation_basis: rng.random_bool(0.5).then(|| token(rng, 9)),
        },
        extension: Extension {
            domain: domain.to_owned(),
            payload,
        },
        extra,
    }
}

/// A valid active duty with a deadline up to 120 days out.
pub fn duty(rng: &mut impl Rng, id: impl Into<String>, now: DateTime<Utc>) -> DutyRecord {
    let ty = *DutyType::ALL.choose(rng).unwrap();
    let deadline = now + Duration::minutes(rng.random_range(0..120 * 1440));
    let mut d = DutyRecord::new(id, ty, format!("Counterparty {}", token(rng, 3)), deadline, now);
    d.counterparty_domain = ["insurance", "healthcare", "retail", "automotive", "tax"].choose(rng).unwrap().to_string();
    if rng.random_bool(0.5) {
        d.escalation_capability = Some(["compare quotes", "book appointment", "renew online", "call agent"].choose(rng).unwrap().to_string());
    }
    if !d.toc_params.is_step() && rng.random_bool(0.3) {
        d.toc_params = TocParams::gaussian(
            rng.random_range(1.0..60.0),
            rng.random_range(0.5..20.0),
            rng.random_range(0.5..20.0),
        );
    }
    d
}

/// Vehicle service in 60 days, prescription refill in 22, insurance renewal in 7:
/// under default settings and a neutral context they land in SLEEP, NUDGE and ACT_NOW.
pub fn three_zone_duties(now: DateTime<Utc>) -> [DutyRecord; 3] {
    let at = |days: i64| now + Duration::days(days);
    [
        DutyRecord::new("vehicle-service", DutyType::VehicleService, "Honda Service", at(60), now),
        DutyRecord::new("prescription-refill", DutyType::PrescriptionRefill, "CVS Pharmacy", at(22), now),
        DutyRecord::new("insurance-renewal", DutyType::InsuranceRenewal, "State Farm", at(7), now)
            .with_reference("POL-98234"),
    ]
}

/// A registry holding [`three_zone_duties`].
pub fn three_zone_registry(now: DateTime<Utc>) -> Registry {
    let mut reg = Registry::default();
    for d in three_zone_duties(now) {
        reg.register_duty(d).expect("demo duties are valid");
    }
    reg
}
