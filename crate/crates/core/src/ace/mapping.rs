use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;

use super::{AceEnvelope, Category};
use crate::aria::{rewards_to_duty, RewardsRules, RewardsSignal};
use crate::duty::{days_between, DutyId, DutyRecord, DutySource, DutyStatus, DutyType, Money, TocParams};

/// Lower bound on the curve width reconstructed from a window.
const MIN_SIGMA_DAYS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToDutyError {
    #[error("{0} messages do not create duties")]
    NotADuty(Category),
    #[error("cannot map envelope to a duty: {0}")]
    MappingFailure(String),
}

/// Maps a decoded envelope onto a duty, using the default rewards rules.
pub fn to_duty(
    env: &AceEnvelope,
    type_hint: Option<DutyType>,
    received_at: DateTime<Utc>,
) -> Result<DutyRecord, ToDutyError> {
    to_duty_with(env, type_hint, received_at, &RewardsRules::default())
}

/// The optimal window is read as `mu +/- sigma` in days-until-deadline space.
pub fn to_duty_with(
    env: &AceEnvelope,
    type_hint: Option<DutyType>,
    received_at: DateTime<Utc>,
    rewards: &RewardsRules,
) -> Result<DutyRecord, ToDutyError> {
    let temp = &env.ace_temp;
    if matches!(env.category, Category::CommercialOpportunity | Category::SocialPlatformUpdate) {
        return Err(ToDutyError::NotADuty(env.category));
    }
    if temp.deadline < received_at {
        return Err(ToDutyError::MappingFailure(format!(
            "deadline {} precedes receipt {}",
            temp.deadline.to_rfc3339(),
            received_at.to_rfc3339()
        )));
    }
    let id = DutyId::new(format!("ace-{}", env.message_id));
    let capability = (!env.ace_scope.permitted_actions.is_empty()).then(|| env.ace_scope.permitted_actions.join(" "));

    match env.category {
        Category::CommercialOpportunity | Category::SocialPlatformUpdate => Err(ToDutyError::NotADuty(env.category)),
        Category::RewardsSignal => {
            let signal = RewardsSignal {
                program: env.sender.institution_name.clone(),
                points_balance: 0,
                points_expiry: Some(temp.deadline),
                redeemable_value_minor: env.ace_value.amount_minor,
                currency: env.ace_value.currency.clone(),
            };
            let mut duty =
                rewards_to_duty(&signal, rewards, received_at).ok_or(ToDutyError::NotADuty(Category::RewardsSignal))?;
            duty.id = id;
            duty.source = DutySource::Ace;
            duty.escalation_capability = capability;
            Ok(duty)
        }
        Category::TemporalObligation => {
            let t_start = days_between(temp.optimal_window_start, temp.deadline);
            let t_end = days_between(temp.optimal_window_end, temp.deadline);
            let duty_type = type_hint.unwrap_or_else(|| infer_type(env));
            let toc_params = if duty_type == DutyType::BopisPickup {
                TocParams::step(t_start)
            } else {
                let sigma = ((t_start - t_end) / 2.0).max(MIN_SIGMA_DAYS);
                TocParams::gaussian((t_start + t_end) / 2.0, sigma, sigma)
            };
            let reference = env
                .extension
                .payload
                .get("reference_number")
                .and_then(Value::as_str)
                .map(str::to_owned);
            let value = (env.ace_value.amount_minor > 0).then(|| Money {
                amount_minor: env.ace_value.amount_minor as i64,
                currency: env.ace_value.currency.clone(),
            });
            let duty = DutyRecord {
                id,
                duty_type,
                counterparty: env.sender.institution_name.clone(),
                counterparty_domain: env.sender.domain_tag.to_lowercase(),
                deadline: temp.deadline,
                reference_number: reference,
                escalation_capability: capability,
                toc_params,
                value_estimate: value,
                source: DutySource::Ace,
                created_at: received_at,
                status: DutyStatus::Active,
            };
            let violations = duty.violations();
            if violations.is_empty() {
                Ok(duty)
            } else {
                Err(ToDutyError::MappingFailure(violations.join("; ")))
            }
        }
    }
}

fn payload_is(env: &AceEnvelope, key: &str, want: &str) -> bool {
    env.extension
        .payload
        .get(key)
        .and_then(Value::as_str)
        .is_some_and(|v| v.eq_ignore_ascii_case(want))
}

fn infer_type(env: &AceEnvelope) -> DutyType {
    match env.extension.domain.as_str() {
        "FINANCIAL" if env.ace_value.benefit_type.to_lowercase().contains("insurance") => DutyType::InsuranceRenewal,
        "HEALTHCARE" if payload_is(env, "care_type", "prescription") => DutyType::PrescriptionRefill,
        "HEALTHCARE" => DutyType::WellnessVisit,
        "RETAIL" | "ECOMMERCE" if payload_is(env, "fulfillment", "pickup") => DutyType::BopisPickup,
        "RETAIL" | "ECOMMERCE" => DutyType::ReturnDeadline,
        _ => DutyType::Custom,
    }
}
