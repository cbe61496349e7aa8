//! Tier-1 keyword/regex extraction of duties from obligation mail.

use std::sync::LazyLock;

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Utc};
use regex::Regex;
use thiserror::Error;

use super::InboundMessage;
use crate::canonical::checksum;
use crate::duty::{days_between, DutyId, DutyRecord, DutySource, DutyStatus, DutyType, TocParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractionError {
    #[error("extraction failed: {0}")]
    ExtractionFailed(String),
}

/// Fallback extractor consulted when the pattern rules give up.
pub trait Tier2Extractor: Send + Sync {
    fn extract(&self, msg: &InboundMessage) -> Option<DutyRecord>;
}

/// Declines every message; failed extractions go to manual review.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeclineAll;

impl Tier2Extractor for DeclineAll {
    fn extract(&self, _msg: &InboundMessage) -> Option<DutyRecord> {
        None
    }
}

static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{4})-(\d{2})-(\d{2})\b").unwrap());
static MONTH_DATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\.?\s+(\d{1,2})(?:st|nd|rd|th)?\b(?:,?\s+(\d{4})\b)?",
    )
    .unwrap()
});
static RELATIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:in|for|within)\s+(\d{1,3})\s+days?\b").unwrap());
static REFERENCE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:policy|order|ref(?:erence)?|confirmation|account|case|ticket|rx)\b\s*(?:#|no\.?|number)?\s*:?\s*#?\s*([A-Za-z0-9][A-Za-z0-9-]*)")
        .unwrap()
});

/// The first date in `text`, resolved against the receipt time.
///
/// Absolute dates resolve to midnight UTC; month-day dates without a year take
/// the next occurrence on or after the receipt date; "in/for/within N days" is
/// relative to the receipt instant.
pub fn parse_deadline(text: &str, received_at: DateTime<Utc>) -> Option<DateTime<Utc>> {
    let mut found: Vec<(usize, DateTime<Utc>)> = Vec::new();
    for c in ISO_DATE.captures_iter(text) {
        let (y, m, d) = (c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?);
        if let Some(date) = NaiveDate::from_ymd_opt(y, m, d) {
            found.push((c.get(0).unwrap().start(), midnight(date)));
        }
    }
    for c in MONTH_DATE.captures_iter(text) {
        let month = month_number(&c[1]);
        let day: u32 = c[2].parse().ok()?;
        let date = match c.get(3) {
            Some(y) => NaiveDate::from_ymd_opt(y.as_str().parse().ok()?, month, day),
            None => {
                let today = received_at.date_naive();
                NaiveDate::from_ymd_opt(today.year(), month, day)
                    .filter(|d| *d >= today)
                    .or_else(|| NaiveDate::from_ymd_opt(today.year() + 1, month, day))
            }
        };
        if let Some(date) = date {
            found.push((c.get(0).unwrap().start(), midnight(date)));
        }
    }
    for c in RELATIVE.captures_iter(text) {
        let n: i64 = c[1].parse().ok()?;
        found.push((c.get(0).unwrap().start(), received_at + Duration::days(n)));
    }
    found.into_iter().min_by_key(|(pos, _)| *pos).map(|(_, d)| d)
}

fn midnight(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap())
}

fn month_number(s: &str) -> u32 {
    let s = s.to_ascii_lowercase();
    const MONTHS: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];
    MONTHS.iter().position(|m| s.starts_with(m)).map(|i| i as u32 + 1).unwrap_or(1)
}

/// Reference token following "policy", "order", "ref", etc. Must contain a digit.
pub fn parse_reference(text: &str) -> Option<String> {
    REFERENCE
        .captures_iter(text)
        .map(|c| c[1].trim_end_matches('-').to_owned())
        .find(|t| t.chars().any(|c| c.is_ascii_digit()))
}

const TYPE_KEYWORDS: &[(DutyType, &[&str])] = &[
    (DutyType::PrescriptionRefill, &["prescription", "refill", "pharmacy"]),
    (DutyType::BopisPickup, &["ready for pickup", "ready for pick up", "pickup", "pick up", "curbside"]),
    (DutyType::InsuranceRenewal, &["policy", "insurance", "premium", "coverage"]),
    (DutyType::TaxDeadline, &["tax", "irs"]),
    (DutyType::LicenseRenewal, &["license", "licence", "registration"]),
    (DutyType::TravelCheckIn, &["check-in", "check in", "flight", "boarding"]),
    (DutyType::ReturnDeadline, &["return by", "return window", "return"]),
    (DutyType::VehicleService, &["oil change", "maintenance", "inspection", "vehicle", "service"]),
    (DutyType::WellnessVisit, &["appointment", "checkup", "check-up", "wellness", "annual exam"]),
    (DutyType::SubscriptionRenewal, &["subscription", "membership", "plan"]),
    (DutyType::SupportFollowUp, &["ticket", "case", "support"]),
];

pub fn infer_duty_type(text: &str) -> DutyType {
    let lower = text.to_lowercase();
    TYPE_KEYWORDS
        .iter()
        .find(|(_, words)| words.iter().any(|w| contains_word(&lower, w)))
        .map(|(t, _)| *t)
        .unwrap_or(DutyType::Custom)
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

const KNOWN_SENDERS: &[(&str, &str)] = &[
    ("statefarm.example", "State Farm"),
    ("allstate.example", "Allstate"),
    ("geico.example", "GEICO"),
    ("cvs.example", "CVS Pharmacy"),
    ("walgreens.example", "Walgreens"),
    ("honda.example", "Honda Service Center"),
    ("target.example", "Target"),
    ("irs.example", "IRS"),
    ("dmv.example", "DMV"),
    ("united.example", "United Airlines"),
];

/// Display name for a sender domain.
pub fn counterparty_for(domain: &str) -> String {
    let domain = domain.trim().to_lowercase();
    if let Some((_, name)) = KNOWN_SENDERS
        .iter()
        .find(|(d, _)| domain == *d || domain.ends_with(&format!(".{d}")))
    {
        return (*name).to_owned();
    }
    let labels: Vec<&str> = domain.split('.').filter(|l| !l.is_empty()).collect();
    let label = match labels.len() {
        0 => return "Unknown sender".to_owned(),
        1 => labels[0],
        n => labels[n - 2],
    };
    let mut chars = label.chars();
    match chars.next() {
        Some(f) => f.to_uppercase().chain(chars).collect(),
        None => "Unknown sender".to_owned(),
    }
}

/// Stable id derived from the message identity.
pub fn message_duty_id(msg: &InboundMessage) -> DutyId {
    let key = format!("{}\n{}\n{}", msg.sender_address, msg.subject, msg.received_at.to_rfc3339());
    DutyId::new(format!("aria-{}", &checksum(key.as_bytes())[..12]))
}

/// Pattern-based extraction. A message without a parseable deadline fails.
pub fn tier1_extract(msg: &InboundMessage) -> Result<DutyRecord, ExtractionError> {
    let text = msg.text();
    let deadline = parse_deadline(&text, msg.received_at)
        .ok_or_else(|| ExtractionError::ExtractionFailed("no deadline found".into()))?;
    if deadline < msg.received_at {
        return Err(ExtractionError::ExtractionFailed("deadline precedes receipt".into()));
    }
    let duty_type = infer_duty_type(&text);
    let toc_params = if duty_type == DutyType::BopisPickup {
        TocParams::step(days_between(msg.received_at, deadline))
    } else {
        duty_type.default_toc()
    };
    Ok(DutyRecord {
        id: message_duty_id(msg),
        duty_type,
        counterparty: counterparty_for(&msg.sender_domain),
        counterparty_domain: duty_type.default_domain().to_owned(),
        deadline,
        reference_number: parse_reference(&text),
        escalation_capability: None,
        toc_params,
        value_estimate: None,
        source: DutySource::Aria,
        created_at: msg.received_at,
        status: DutyStatus::Active,
    })
}
