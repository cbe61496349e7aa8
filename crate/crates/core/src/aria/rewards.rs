use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::extract::{counterparty_for, message_duty_id, parse_deadline};
use super::InboundMessage;
use crate::duty::{DutyId, DutyRecord, DutySource, DutyStatus, DutyType, Money, TocParams};

/// Loyalty balance notice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardsSignal {
    pub program: String,
    pub points_balance: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_expiry: Option<DateTime<Utc>>,
    pub redeemable_value_minor: u64,
    pub currency: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardsRules {
    /// Value must strictly exceed this to become a duty (USD 5.00).
    pub threshold_minor: u64,
    /// Width of the cliff window before expiry.
    pub redemption_window_days: f64,
}

impl Default for RewardsRules {
    fn default() -> Self {
        RewardsRules {
            threshold_minor: 500,
            redemption_window_days: 14.0,
        }
    }
}

/// Cliff-curve duty for an expiring balance worth more than the threshold.
pub fn rewards_to_duty(sig: &RewardsSignal, rules: &RewardsRules, now: DateTime<Utc>) -> Option<DutyRecord> {
    let expiry = sig.points_expiry?;
    if sig.redeemable_value_minor <= rules.threshold_minor || expiry < now {
        return None;
    }
    let id = format!(
        "rewards-{}-{}",
        sig.program.to_lowercase().split_whitespace().collect::<Vec<_>>().join("-"),
        expiry.format("%Y%m%d")
    );
    Some(DutyRecord {
        id: DutyId::new(id),
        duty_type: DutyType::Custom,
        counterparty: sig.program.clone(),
        counterparty_domain: "rewards".to_owned(),
        deadline: expiry,
        reference_number: None,
        escalation_capability: Some("redeem points".to_owned()),
        toc_params: TocParams::step(rules.redemption_window_days),
        value_estimate: Some(Money {
            amount_minor: sig.redeemable_value_minor as i64,
            currency: sig.currency.clone(),
        }),
        source: DutySource::Aria,
        created_at: now,
        status: DutyStatus::Active,
    })
}

static POINTS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(\d[\d,]*)\s+(?:points|pts|miles)\b").unwrap());
static MONEY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([$€£])\s?(\d[\d,]*)(?:\.(\d{2}))?").unwrap());

/// Reads balance, expiry and redeemable value out of a rewards message.
pub fn parse_rewards(msg: &InboundMessage) -> RewardsSignal {
    let text = msg.text();
    let points_balance = POINTS
        .captures(&text)
        .and_then(|c| c[1].replace(',', "").parse().ok())
        .unwrap_or(0);
    let (redeemable_value_minor, currency) = MONEY
        .captures(&text)
        .map(|c| {
            let major: u64 = c[2].replace(',', "").parse().unwrap_or(0);
            let minor: u64 = c.get(3).map(|m| m.as_str().parse().unwrap_or(0)).unwrap_or(0);
            let cur = match &c[1] {
                "€" => "EUR",
                "£" => "GBP",
                _ => "USD",
            };
            (major * 100 + minor, cur.to_owned())
        })
        .unwrap_or((0, "USD".to_owned()));
    let lower = text.to_lowercase();
    let points_expiry = if lower.contains("expir") {
        parse_deadline(&text, msg.received_at)
    } else {
        None
    };
    RewardsSignal {
        program: counterparty_for(&msg.sender_domain),
        points_balance,
        points_expiry,
        redeemable_value_minor,
        currency,
    }
}

/// Duty for a rewards message, keyed by the message rather than the program.
pub(crate) fn rewards_duty_for_message(
    msg: &InboundMessage,
    sig: &RewardsSignal,
    rules: &RewardsRules,
) -> Option<DutyRecord> {
    let mut d = rewards_to_duty(sig, rules, msg.received_at)?;
    d.id = message_duty_id(msg);
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn now() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2026, 5, 1, 12, 0, 0).unwrap()
    }

    fn sig(value: u64, expiry: bool) -> RewardsSignal {
        RewardsSignal {
            program: "Coffee Club".into(),
            points_balance: 1200,
            points_expiry: expiry.then(|| now() + Duration::days(30)),
            redeemable_value_minor: value,
            currency: "USD".into(),
        }
    }

    #[test]
    fn cliff_rule() {
        let rules = RewardsRules::default();
        let d = rewards_to_duty(&sig(1200, true), &rules, now()).unwrap();
        assert!(d.toc_params.is_step());
        assert_eq!(d.toc_params.pickup_window_days, Some(14.0));
        assert_eq!(d.deadline, now() + Duration::days(30));
        assert!(rewards_to_duty(&sig(300, true), &rules, now()).is_none());
        assert!(rewards_to_duty(&sig(5000, false), &rules, now()).is_none());
        // strictly greater than the threshold
        assert!(rewards_to_duty(&sig(500, true), &rules, now()).is_none());
        assert!(rewards_to_duty(&sig(501, true), &rules, now()).is_some());
    }

    #[test]
    fn parses_message() {
        let msg = InboundMessage {
            sender_address: "club@beans.example".into(),
            sender_domain: "beans.example".into(),
            subject: "Your points are expiring".into(),
            body_text: "You have 1,200 points worth $12.00 expiring June 1, 2026.".into(),
            received_at: now(),
        };
        let s = parse_rewards(&msg);
        assert_eq!(s.points_balance, 1200);
        assert_eq!(s.redeemable_value_minor, 1200);
        assert_eq!(s.points_expiry, Some(Utc.with_ymd_and_hms(2026, 6, 1, 0, 0, 0).unwrap()));
        assert_eq!(s.program, "Beans");
    }
}
