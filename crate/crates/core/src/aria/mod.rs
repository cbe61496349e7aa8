//! ARIA: classify inbound mail, score promotions against purchase history,
//! extract duties and decide what happens to each message.

mod extract;
mod ppm;
mod rewards;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::duty::{DutyId, DutyRecord, Registry, RegistryError};
use crate::notify::{EventSink, PushEvent, PushKind};

pub use crate::ace::Category as MessageCategory;
pub use extract::{
    counterparty_for, infer_duty_type, message_duty_id, parse_deadline, parse_reference, tier1_extract, DeclineAll,
    ExtractionError, Tier2Extractor,
};
pub use ppm::{ppm_score, recency, Purchase, PurchasePatternModel, RECENCY_WINDOW_DAYS};
pub use rewards::{parse_rewards, rewards_to_duty, RewardsRules, RewardsSignal};

/// Promotions at or above this purchase-pattern score are kept and surfaced.
pub const PPM_GATE: f64 = 0.5;
/// Social updates notify only when engagement probability reaches this.
pub const BEP_GATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InboundMessage {
    pub sender_address: String,
    pub sender_domain: String,
    pub subject: String,
    pub body_text: String,
    pub received_at: DateTime<Utc>,
}

impl InboundMessage {
    /// Subject and body, the text every rule looks at.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.subject, self.body_text)
    }

    /// Reads either the JSON form or a plain-text message:
    ///
    /// ```text
    /// From: notices@statefarm.example
    /// Subject: Renewal notice
    /// Date: 2026-02-01T09:00:00Z
    ///
    /// Your policy POL-98234 renews March 10, 2026.
    /// ```
    ///
    /// Unrecognized headers are ignored; see [`header`].
    pub fn parse(text: &str) -> Result<InboundMessage, String> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| e.to_string());
        }
        let from = header(text, "From").ok_or("missing From header")?;
        let subject = header(text, "Subject").unwrap_or_default();
        let date = header(text, "Date").ok_or("missing Date header")?;
        let received_at = DateTime::parse_from_rfc3339(&date)
            .map_err(|e| format!("bad Date header: {e}"))?
            .with_timezone(&Utc);
        let address = from
            .rsplit_once('<')
            .map(|(_, a)| a.trim_end_matches('>').to_owned())
            .unwrap_or(from);
        let domain = address.rsplit_once('@').map(|(_, d)| d.to_lowercase()).ok_or("From has no domain")?;
        let body = text
            .replace("\r\n", "\n")
            .split_once("\n\n")
            .map(|(_, b)| b.trim().to_owned())
            .unwrap_or_default();
        Ok(InboundMessage {
            sender_address: address,
            sender_domain: domain,
            subject,
            body_text: body,
            received_at,
        })
    }
}

/// Value of a header line in a plain-text message (case-insensitive name).
pub fn header(text: &str, name: &str) -> Option<String> {
    text.lines()
        .take_while(|l| !l.trim().is_empty())
        .filter_map(|l| l.split_once(':'))
        .find(|(k, _)| k.trim().eq_ignore_ascii_case(name))
        .map(|(_, v)| v.trim().to_owned())
}

static REWARDS_KW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b\d[\d,]*\s+(?:bonus\s+)?(?:points|pts|miles)\b|\b(?:points|miles)\s+balance\b|\btier\s+status\b|\b(?:gold|silver|platinum|elite)\s+tier\b").unwrap()
});
static BALANCE_EXPIRY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)\bbalance\b.*\bexpir|\bexpir.*\bbalance\b").unwrap());
static OBLIGATION_KW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:renew\w*|expir\w*|due|pick\s?up|return\s+by|refill\w*|appointment|deadline|file\s+by)\b").unwrap()
});
static PROMO_KW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:sale|offers?|deals?|discount\w*|coupon\w*|promo\w*|clearance)\b|\d+\s*%\s*off\b").unwrap()
});
static SOCIAL_KW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:followers?|mentioned|community|commented|tagged\s+you|liked\s+your|new\s+connection)\b").unwrap()
});

/// Rule cascade: rewards, then dated obligations, then promotions, then
/// social updates; anything else is treated as commercial.
pub fn classify(msg: &InboundMessage) -> MessageCategory {
    let text = msg.text();
    if REWARDS_KW.is_match(&text) || BALANCE_EXPIRY.is_match(&text) {
        return MessageCategory::RewardsSignal;
    }
    if OBLIGATION_KW.is_match(&text) && parse_deadline(&text, msg.received_at).is_some() {
        return MessageCategory::TemporalObligation;
    }
    if PROMO_KW.is_match(&text) {
        return MessageCategory::CommercialOpportunity;
    }
    if SOCIAL_KW.is_match(&text) {
        return MessageCategory::SocialPlatformUpdate;
    }
    MessageCategory::CommercialOpportunity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action")]
pub enum RoutingAction {
    RegisterDuty { duty: DutyRecord },
    StoreAndNotifyLowPriority { score: f64 },
    ArchiveSilently,
    NotifyOnly,
    UpdateRewardsGraph { signal: RewardsSignal },
    /// Extraction failed at both tiers; queued for a human.
    ManualReview { reason: String },
}

impl RoutingAction {
    pub fn name(&self) -> &'static str {
        match self {
            RoutingAction::RegisterDuty { .. } => "RegisterDuty",
            RoutingAction::StoreAndNotifyLowPriority { .. } => "StoreAndNotifyLowPriority",
            RoutingAction::ArchiveSilently => "ArchiveSilently",
            RoutingAction::NotifyOnly => "NotifyOnly",
            RoutingAction::UpdateRewardsGraph { .. } => "UpdateRewardsGraph",
            RoutingAction::ManualReview { .. } => "ManualReview",
        }
    }

    /// Whether `self` is an allowed outcome for `category`.
    pub fn allowed_for(&self, category: MessageCategory) -> bool {
        use RoutingAction as A;
        match category {
            MessageCategory::TemporalObligation => matches!(self, A::RegisterDuty { .. } | A::ManualReview { .. }),
            MessageCategory::CommercialOpportunity => {
                matches!(self, A::StoreAndNotifyLowPriority { .. } | A::ArchiveSilently)
            }
            MessageCategory::RewardsSignal => matches!(self, A::RegisterDuty { .. } | A::UpdateRewardsGraph { .. }),
            MessageCategory::SocialPlatformUpdate => matches!(self, A::NotifyOnly | A::ArchiveSilently),
        }
    }
}

impl fmt::Display for RoutingAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Routing with the default rules and no tier-2 extractor.
pub fn route(msg: &InboundMessage, ppm: &PurchasePatternModel, bep_at_ingest: f64, now: DateTime<Utc>) -> RoutingAction {
    route_with(msg, classify(msg), ppm, bep_at_ingest, now, &RewardsRules::default(), &DeclineAll)
}

pub fn route_with(
    msg: &InboundMessage,
    category: MessageCategory,
    ppm: &PurchasePatternModel,
    bep_at_ingest: f64,
    now: DateTime<Utc>,
    rules: &RewardsRules,
    tier2: &dyn Tier2Extractor,
) -> RoutingAction {
    match category {
        MessageCategory::TemporalObligation => match tier1_extract(msg) {
            Ok(duty) => RoutingAction::RegisterDuty { duty },
            Err(ExtractionError::ExtractionFailed(reason)) => match tier2.extract(msg) {
                Some(duty) => RoutingAction::RegisterDuty { duty },
                None => RoutingAction::ManualReview { reason },
            },
        },
        MessageCategory::CommercialOpportunity => {
            let score = ppm_score(msg, ppm, now);
            if score >= PPM_GATE {
                RoutingAction::StoreAndNotifyLowPriority { score }
            } else {
                RoutingAction::ArchiveSilently
            }
        }
        MessageCategory::RewardsSignal => {
            let signal = parse_rewards(msg);
            match rewards::rewards_duty_for_message(msg, &signal, rules) {
                Some(duty) => RoutingAction::RegisterDuty { duty },
                None => RoutingAction::UpdateRewardsGraph { signal },
            }
        }
        MessageCategory::SocialPlatformUpdate => {
            if bep_at_ingest >= BEP_GATE {
                RoutingAction::NotifyOnly
            } else {
                RoutingAction::ArchiveSilently
            }
        }
    }
}

/// What happened to one message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Routed {
    pub category: MessageCategory,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty_id: Option<DutyId>,
}

/// Stateful side of ARIA: purchase history, the rewards graph, kept offers
/// and the manual-review queue. Owned by a single writer.
pub struct AriaRouter {
    pub ppm: PurchasePatternModel,
    pub rules: RewardsRules,
    /// Latest known balance per program.
    pub rewards_graph: BTreeMap<String, RewardsSignal>,
    pub stored_offers: Vec<InboundMessage>,
    pub review_queue: Vec<(InboundMessage, String)>,
    tier2: Box<dyn Tier2Extractor>,
}

impl Default for AriaRouter {
    fn default() -> Self {
        AriaRouter::new(PurchasePatternModel::new())
    }
}

impl fmt::Debug for AriaRouter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AriaRouter")
            .field("purchases", &self.ppm.purchases().len())
            .field("rewards_graph", &self.rewards_graph.len())
            .field("stored_offers", &self.stored_offers.len())
            .field("review_queue", &self.review_queue.len())
            .finish()
    }
}

impl AriaRouter {
    pub fn new(ppm: PurchasePatternModel) -> Self {
        AriaRouter {
            ppm,
            rules: RewardsRules::default(),
            rewards_graph: BTreeMap::new(),
            stored_offers: Vec::new(),
            review_queue: Vec::new(),
            tier2: Box::new(DeclineAll),
        }
    }

    pub fn with_tier2(mut self, tier2: impl Tier2Extractor + 'static) -> Self {
        self.tier2 = Box::new(tier2);
        self
    }

    pub fn with_rules(mut self, rules: RewardsRules) -> Self {
        self.rules = rules;
        self
    }

    pub fn update_ppm(&mut self, purchase: Purchase) {
        self.ppm.update(purchase);
    }

    /// Pure decision for `msg`; nothing is mutated.
    pub fn decide(&self, msg: &InboundMessage, bep_at_ingest: f64, now: DateTime<Utc>) -> (MessageCategory, RoutingAction) {
        let category = classify(msg);
        let action = route_with(msg, category, &self.ppm, bep_at_ingest, now, &self.rules, self.tier2.as_ref());
        (category, action)
    }

    /// Routes `msg` and carries out the action: registers duties, emits push
    /// events and updates local state. Silent archival emits nothing.
    /// A message whose duty is already registered is acknowledged without a
    /// second event.
    pub fn dispatch(
        &mut self,
        msg: &InboundMessage,
        registry: &mut Registry,
        sink: &dyn EventSink,
        bep_at_ingest: f64,
        now: DateTime<Utc>,
    ) -> Result<Routed, RegistryError> {
        let (category, action) = self.decide(msg, bep_at_ingest, now);
        let mut routed = Routed {
            category,
            action: action.name().to_owned(),
            duty_id: None,
        };
        let push = |registry: &mut Registry, event: PushEvent| {
            registry.record_push(event.clone());
            sink.deliver(event);
        };
        match action {
            RoutingAction::RegisterDuty { duty } => {
                let body = format!("Tracking {} for {}", duty.duty_type.name(), duty.counterparty);
                match registry.register_duty(duty) {
                    Ok(id) => {
                        push(registry, PushEvent::for_duty(PushKind::DutyRegistered, id.clone(), body, now));
                        routed.duty_id = Some(id);
                    }
                    Err(RegistryError::DuplicateId(id)) => routed.duty_id = Some(id),
                    Err(e) => return Err(e),
                }
            }
            RoutingAction::StoreAndNotifyLowPriority { .. } => {
                let body = format!("{}: {}", counterparty_for(&msg.sender_domain), msg.subject);
                self.stored_offers.push(msg.clone());
                push(registry, PushEvent::general(PushKind::LowPriorityOffer, body, now));
            }
            RoutingAction::NotifyOnly => {
                let body = format!("{}: {}", counterparty_for(&msg.sender_domain), msg.subject);
                push(registry, PushEvent::general(PushKind::SocialNotify, body, now));
            }
            RoutingAction::UpdateRewardsGraph { signal } => {
                self.rewards_graph.insert(signal.program.clone(), signal);
            }
            RoutingAction::ManualReview { reason } => self.review_queue.push((msg.clone(), reason)),
            RoutingAction::ArchiveSilently => {}
        }
        Ok(routed)
    }
}
