use chrono::{Duration, TimeZone};
use serde_json::json;

use super::*;
use crate::duty::DutyType;
use crate::signals::toc;

fn deadline() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 3, 10, 0, 0, 0).unwrap()
}

fn golden() -> Value {
    json!({
        "ace_version": "0.1",
        "message_id": "sf-2026-0001",
        "sender": {"institution_name": "State Farm", "domain_tag": "insurance"},
        "category": "TemporalObligation",
        "ace_temp": {
            "deadline": "2026-03-10T00:00:00Z",
            "optimal_window_start": "2026-01-29T00:00:00Z",
            "optimal_window_end": "2026-02-18T00:00:00Z",
            "urgency_class": "Normal"
        },
        "ace_value": {"amount_minor": 124000, "currency": "USD", "benefit_type": "auto insurance renewal"},
        "ace_scope": {"permitted_actions": ["compare", "renew"]},
        "ace_trust": {"commission_disclosed": false},
        "extension": {"domain": "FINANCIAL", "payload": {"account_type": "policy", "reference_number": "POL-98234"}}
    })
}

fn errors(v: &Value) -> Vec<AceError> {
    Codec::default().decode_value(v).unwrap_err()
}

#[test]
fn golden_decodes() {
    let env = Codec::default().decode_value(&golden()).unwrap();
    assert_eq!(env.category, Category::TemporalObligation);
    assert_eq!(env.ace_temp.deadline, deadline());
    assert_eq!(env.extension.domain, "FINANCIAL");
    assert!(env.extra.is_empty());
}

#[test]
fn each_missing_schema_is_named() {
    for (key, name) in CORE_SCHEMAS {
        let mut v = golden();
        v.as_object_mut().unwrap().remove(key);
        assert_eq!(
            errors(&v),
            vec![AceError::MandatorySchemaMissing { schema: name.into() }],
            "{key}"
        );
    }
}

#[test]
fn collects_every_violation() {
    let mut v = golden();
    v["ace_value"]["currency"] = json!("usd");
    v["ace_scope"]["permitted_actions"] = json!(["Renew", ""]);
    v["ace_trust"]["commission_disclosed"] = json!(true);
    v["ace_temp"]["optimal_window_start"] = json!("2026-02-20T00:00:00Z");
    let errs = errors(&v);
    let paths: Vec<&str> = errs
        .iter()
        .filter_map(|e| match e {
            AceError::SchemaInvariantViolation { path, .. } => Some(path.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(
        paths,
        [
            "ace_temp.optimal_window_start",
            "ace_value.currency",
            "ace_scope.permitted_actions[0]",
            "ace_scope.permitted_actions[1]",
            "ace_trust.affiliate_disclosure",
        ]
    );
}

#[test]
fn unknown_domain() {
    let mut v = golden();
    v["extension"]["domain"] = json!("GAMING");
    assert_eq!(errors(&v), vec![AceError::UnknownExtensionDomain { name: "GAMING".into() }]);
    let codec = Codec::new(ExtensionRegistry::default().with_extension(ExtensionSpec {
        name: "GAMING".into(),
        required_keys: vec![],
    }));
    assert!(codec.decode_value(&v).is_ok());
}

#[test]
fn missing_discriminator() {
    let mut v = golden();
    v["extension"]["payload"] = json!({});
    assert_eq!(errors(&v)[0].code(), "SchemaInvariantViolation");
}

#[test]
fn malformed_text() {
    assert_eq!(decode("{not json").unwrap_err()[0].code(), "MalformedSyntax");
    assert_eq!(decode("[1,2]").unwrap_err()[0].code(), "MalformedSyntax");
}

#[test]
fn canonical_round_trip() {
    let mut v = golden();
    v["x_vendor_hint"] = json!({"b": 1, "a": [true]});
    let env = Codec::default().decode_value(&v).unwrap();
    assert_eq!(env.extra.len(), 1);
    let wire = encode(&env).unwrap();
    assert!(!wire.contains(' ') || wire.contains("auto insurance"));
    assert!(wire.starts_with(r#"{"ace_scope":"#));
    let back = decode(&wire).unwrap();
    assert_eq!(back, env);
    assert_eq!(encode(&back).unwrap(), wire);
}

#[test]
fn encode_rejects_bad_window() {
    let mut env = Codec::default().decode_value(&golden()).unwrap();
    env.ace_temp.optimal_window_end = env.ace_temp.deadline + Duration::days(1);
    let err = encode(&env).unwrap_err();
    assert_eq!(err.0.len(), 1);
}

#[test]
fn window_maps_to_curve() {
    // window [D-40, D-20] -> mu 30, sigma 10
    let env = Codec::default().decode_value(&golden()).unwrap();
    let at = deadline() - Duration::days(60);
    let duty = to_duty(&env, None, at).unwrap();
    assert_eq!(duty.duty_type, DutyType::InsuranceRenewal);
    assert_eq!(duty.id.as_str(), "ace-sf-2026-0001");
    assert_eq!(duty.reference_number.as_deref(), Some("POL-98234"));
    assert_eq!(duty.escalation_capability.as_deref(), Some("compare renew"));
    let p = duty.toc_params;
    assert_eq!((p.mu_days, p.sigma_pre_days, p.sigma_post_days), (30.0, 10.0, 10.0));
    let half = (-0.5f64).exp();
    assert!((toc(40.0, &p) - half).abs() < 1e-12);
    assert!((toc(20.0, &p) - half).abs() < 1e-12);
}

#[test]
fn degenerate_window_floor() {
    let mut v = golden();
    v["ace_temp"]["optimal_window_start"] = json!("2026-02-08T00:00:00Z");
    v["ace_temp"]["optimal_window_end"] = json!("2026-02-08T00:00:00Z");
    let env = Codec::default().decode_value(&v).unwrap();
    let p = to_duty(&env, None, deadline() - Duration::days(60)).unwrap().toc_params;
    assert_eq!((p.mu_days, p.sigma_post_days), (30.0, 0.5));
}

#[test]
fn non_duty_categories() {
    let mut v = golden();
    v["category"] = json!("SocialPlatformUpdate");
    let env = Codec::default().decode_value(&v).unwrap();
    assert_eq!(
        to_duty(&env, None, deadline() - Duration::days(60)),
        Err(ToDutyError::NotADuty(Category::SocialPlatformUpdate))
    );
}

#[test]
fn rewards_envelope_uses_cliff() {
    let mut v = golden();
    v["category"] = json!("RewardsSignal");
    v["ace_value"]["amount_minor"] = json!(1200);
    let env = Codec::default().decode_value(&v).unwrap();
    let duty = to_duty(&env, None, deadline() - Duration::days(60)).unwrap();
    assert!(duty.toc_params.is_step());
    v["ace_value"]["amount_minor"] = json!(500);
    let env = Codec::default().decode_value(&v).unwrap();
    assert!(matches!(to_duty(&env, None, deadline() - Duration::days(60)), Err(ToDutyError::NotADuty(_))));
}

#[test]
fn bopis_hint() {
    let mut v = golden();
    v["extension"] = json!({"domain": "RETAIL", "payload": {"fulfillment": "pickup"}});
    let env = Codec::default().decode_value(&v).unwrap();
    let duty = to_duty(&env, None, deadline() - Duration::days(60)).unwrap();
    assert_eq!(duty.duty_type, DutyType::BopisPickup);
    assert_eq!(duty.toc_params.pickup_window_days, Some(40.0));
}
