use chrono::{DateTime, Utc};

use super::{EngineConfig, EngineError, WakeDecision, Zone};
use crate::duty::{days_between, DutyRecord, DutyType};
use crate::signals::cdr_pair;

const INSURANCE_LINES: &[&str] = &[
    "auto", "car", "home", "homeowners", "renters", "condo", "life", "health", "dental", "vision", "pet", "travel",
    "umbrella", "motorcycle", "boat", "flood",
];

pub(crate) fn long_date(at: DateTime<Utc>) -> String {
    at.format("%B %-d, %Y").to_string()
}

fn what(duty: &DutyRecord) -> &'static str {
    match duty.duty_type {
        DutyType::InsuranceRenewal => "policy renewal",
        DutyType::PrescriptionRefill => "prescription refill",
        DutyType::WellnessVisit => "wellness visit",
        DutyType::SubscriptionRenewal => "subscription renewal",
        DutyType::VehicleService => "vehicle service",
        DutyType::ReturnDeadline => "return window",
        DutyType::LicenseRenewal => "license renewal",
        DutyType::SupportFollowUp => "support follow-up",
        DutyType::TaxDeadline => "tax deadline",
        DutyType::TravelCheckIn => "check-in",
        DutyType::Custom => "deadline",
        DutyType::BopisPickup => "order pickup",
    }
}

/// Notification text for a decision without a batching partner.
pub fn decision_message(duty: &DutyRecord, d: &WakeDecision) -> String {
    let days = d.t_days.max(0.0).ceil() as i64;
    match d.zone {
        Zone::Sleep => format!("{}: nothing to do yet for your {}.", duty.counterparty, what(duty)),
        Zone::Nudge => format!(
            "{}: your {} is due {}. Now is a good time to look at it.",
            duty.counterparty,
            what(duty),
            long_date(duty.deadline)
        ),
        Zone::ActNow => format!(
            "{}: your {} is due in {} day{}. Act now.",
            duty.counterparty,
            what(duty),
            days,
            if days == 1 { "" } else { "s" }
        ),
    }
}

fn insurance_line(counterparty: &str) -> Option<String> {
    counterparty
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .find(|w| INSURANCE_LINES.contains(&w.as_str()))
}

pub(crate) fn batch_text(a: &DutyRecord, b: &DutyRecord) -> String {
    let gap = days_between(a.deadline, b.deadline).abs();
    let weeks = ((gap / 7.0).ceil() as i64).max(1);
    let span = format!("{} week{}", weeks, if weeks == 1 { "" } else { "s" });
    if a.counterparty_domain == "insurance" && b.counterparty_domain == "insurance" {
        let la = insurance_line(&a.counterparty).unwrap_or_else(|| a.counterparty.clone());
        let lb = insurance_line(&b.counterparty).unwrap_or_else(|| b.counterparty.clone());
        format!("Your {la} and {lb} insurance both renew within {span} \u{2014} bundling them typically saves 12\u{2013}18%.")
    } else {
        format!(
            "Your {} {} and {} {} both fall within {span} \u{2014} handle them together in one session.",
            a.counterparty,
            what(a),
            b.counterparty,
            what(b)
        )
    }
}

/// Single batching message naming both duties; requires their resonance to reach the batch threshold.
pub fn batch_message(a: &DutyRecord, b: &DutyRecord, cfg: &EngineConfig) -> Result<String, EngineError> {
    let score = cdr_pair(a, b);
    if score < cfg.batch_threshold {
        return Err(EngineError::PrecondViolation(format!(
            "resonance {score:.2} between {} and {} is below the batch threshold {:.2}",
            a.id, b.id, cfg.batch_threshold
        )));
    }
    Ok(batch_text(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    #[test]
    fn insurance_bundle_wording() {
        let created = at(2026, 1, 1);
        let auto = DutyRecord::new("auto", DutyType::InsuranceRenewal, "State Farm Auto", at(2026, 3, 10), created)
            .with_capability("compare quotes");
        let home = DutyRecord::new("home", DutyType::InsuranceRenewal, "Allstate Home", at(2026, 4, 21), created)
            .with_capability("compare quotes");
        let msg = batch_message(&auto, &home, &EngineConfig::default()).unwrap();
        assert_eq!(
            msg,
            "Your auto and home insurance both renew within 6 weeks \u{2014} bundling them typically saves 12\u{2013}18%."
        );
    }

    #[test]
    fn pharmacy_pair_has_no_savings_claim() {
        let created = at(2026, 1, 1);
        let a = DutyRecord::new("a", DutyType::PrescriptionRefill, "CVS Pharmacy", at(2026, 3, 1), created)
            .with_domain("pharmacy");
        let b = DutyRecord::new("b", DutyType::PrescriptionRefill, "Walgreens", at(2026, 3, 5), created)
            .with_domain("pharmacy");
        let msg = batch_message(&a, &b, &EngineConfig::default()).unwrap();
        assert!(msg.contains("CVS Pharmacy") && msg.contains("Walgreens"));
        assert!(!msg.contains('%'));
    }

    #[test]
    fn below_threshold_is_rejected() {
        let created = at(2026, 1, 1);
        let a = DutyRecord::new("a", DutyType::TaxDeadline, "IRS", at(2026, 4, 15), created);
        let b = DutyRecord::new("b", DutyType::VehicleService, "Honda", at(2026, 9, 1), created);
        assert!(matches!(
            batch_message(&a, &b, &EngineConfig::default()),
            Err(EngineError::PrecondViolation(_))
        ));
    }
}
