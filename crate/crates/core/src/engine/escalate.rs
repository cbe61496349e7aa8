//! Rule-based escalation used when no remote agent is reachable.
//!
//! Stateless: everything in the result is derived from the duty record.

use serde::{Deserialize, Serialize};

use super::message::long_date;
use super::EngineError;
use crate::duty::{DutyRecord, DutyStatus, DutyType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationResult {
    pub recommendation: String,
    pub action_points: Vec<String>,
    pub draft_message: String,
}

struct Template {
    recommendation: &'static str,
    actions: &'static [&'static str],
    subject: &'static str,
    ask: &'static str,
}

fn template(t: DutyType) -> Template {
    match t {
        DutyType::InsuranceRenewal => Template {
            recommendation: "Review the renewal terms before they lock in and shop the policy.",
            actions: &[
                "Compare the renewal quote against at least 3 competitors",
                "Check coverage limits and deductibles for changes",
                "Ask the insurer about loyalty or bundling discounts",
            ],
            subject: "my policy renewal",
            ask: "Please send the renewal terms and any discounts I qualify for so I can compare options before the deadline.",
        },
        DutyType::PrescriptionRefill => Template {
            recommendation: "Request the refill now so it is ready before your supply runs out.",
            actions: &[
                "Confirm remaining refills on the prescription",
                "Request the refill for pickup or delivery",
            ],
            subject: "a prescription refill",
            ask: "Please process a refill and let me know when it is ready.",
        },
        DutyType::WellnessVisit => Template {
            recommendation: "Book the visit while preferred appointment slots are still open.",
            actions: &["Check provider availability", "Confirm insurance coverage for the visit"],
            subject: "scheduling a wellness visit",
            ask: "Please share available appointment times.",
        },
        DutyType::SubscriptionRenewal => Template {
            recommendation: "Decide whether to keep, downgrade or cancel before the renewal charge.",
            actions: &[
                "Review how often the subscription was used",
                "Look for a cheaper plan or retention offer",
                "Cancel before the renewal date if not needed",
            ],
            subject: "my subscription renewal",
            ask: "Please confirm the renewal price and any available plan options.",
        },
        DutyType::VehicleService => Template {
            recommendation: "Schedule the service appointment ahead of the due date.",
            actions: &["Check the service interval and mileage", "Book a service slot"],
            subject: "scheduling vehicle service",
            ask: "Please share available service appointments.",
        },
        DutyType::ReturnDeadline => Template {
            recommendation: "Start the return before the window closes.",
            actions: &["Locate the receipt or order confirmation", "Print the return label or find a drop-off point"],
            subject: "returning an item",
            ask: "Please send return instructions and a shipping label.",
        },
        DutyType::LicenseRenewal => Template {
            recommendation: "Renew early to avoid late fees and lapse in validity.",
            actions: &["Gather the required documents", "Check whether online renewal is available", "Pay the renewal fee"],
            subject: "renewing my license",
            ask: "Please confirm the renewal requirements and fees.",
        },
        DutyType::SupportFollowUp => Template {
            recommendation: "Follow up on the open case before it goes stale.",
            actions: &["Summarize the issue and prior contact", "Ask for a resolution date"],
            subject: "an open support case",
            ask: "Please provide an update on this case and an expected resolution date.",
        },
        DutyType::TaxDeadline => Template {
            recommendation: "Prepare and file ahead of the deadline, or request an extension.",
            actions: &["Collect income and deduction documents", "File or request an extension", "Schedule any payment due"],
            subject: "an upcoming tax deadline",
            ask: "Please confirm the documents required and the filing deadline.",
        },
        DutyType::TravelCheckIn => Template {
            recommendation: "Check in as soon as it opens to secure seating.",
            actions: &["Complete online check-in", "Confirm baggage allowance"],
            subject: "checking in for my trip",
            ask: "Please confirm my check-in status.",
        },
        DutyType::Custom => Template {
            recommendation: "Review the obligation and decide on next steps before the deadline.",
            actions: &["Confirm what is required", "Plan the next step before the deadline"],
            subject: "an upcoming deadline",
            ask: "Please confirm what is needed from me before the deadline.",
        },
        DutyType::BopisPickup => unreachable!("pickup duties have no escalation template"),
    }
}

/// Recommendation, action points and a draft message for the duty.
pub fn escalate(duty: &DutyRecord) -> Result<EscalationResult, EngineError> {
    if duty.duty_type == DutyType::BopisPickup {
        return Err(EngineError::EscalationUnavailable(
            "pickup requires physical presence; no agent can act on it".into(),
        ));
    }
    if duty.status != DutyStatus::Active {
        return Err(EngineError::PrecondViolation(format!("duty {} is not active", duty.id)));
    }
    let t = template(duty.duty_type);
    let mut draft = format!("Hello {},\n\nI am writing about {}", duty.counterparty, t.subject);
    draft.push_str(&format!(", due {}.\n", long_date(duty.deadline)));
    if let Some(r) = &duty.reference_number {
        draft.push_str(&format!("Reference: {r}\n"));
    }
    draft.push('\n');
    draft.push_str(t.ask);
    draft.push_str("\n\nThank you.");
    Ok(EscalationResult {
        recommendation: t.recommendation.to_owned(),
        action_points: t.actions.iter().map(|s| (*s).to_owned()).collect(),
        draft_message: draft,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn insurance() -> DutyRecord {
        DutyRecord::new(
            "sf",
            DutyType::InsuranceRenewal,
            "State Farm",
            Utc.with_ymd_and_hms(2026, 3, 10, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap(),
        )
    }

    #[test]
    fn insurance_draft_mentions_reference_and_deadline() {
        let r = escalate(&insurance().with_reference("POL-98234")).unwrap();
        assert!(r.draft_message.contains("POL-98234"));
        assert!(r.draft_message.contains("March 10, 2026"));
        assert!(r.action_points.iter().any(|a| a.contains("at least 3 competitors")));
    }

    #[test]
    fn missing_reference_omits_line() {
        let r = escalate(&insurance()).unwrap();
        assert!(!r.draft_message.contains("Reference"));
    }

    #[test]
    fn every_template_has_two_to_four_points() {
        for t in DutyType::ALL.into_iter().filter(|t| *t != DutyType::BopisPickup) {
            let mut d = insurance();
            d.duty_type = t;
            let r = escalate(&d).unwrap();
            assert!((2..=4).contains(&r.action_points.len()), "{t}");
        }
    }

    #[test]
    fn bopis_is_unavailable() {
        let mut d = insurance();
        d.duty_type = DutyType::BopisPickup;
        assert!(matches!(escalate(&d), Err(EngineError::EscalationUnavailable(_))));
    }
}
