//! ACE: structured institution-to-agent messages.
//!
//! The wire form is JSON with snake_case keys. Canonical encoding sorts keys
//! lexicographically, emits no insignificant whitespace and writes timestamps
//! as RFC 3339 UTC with a `Z` suffix. Top-level keys:
//!
//! `ace_version`, `message_id`, `sender`, `category`, `ace_temp`, `ace_value`,
//! `ace_scope`, `ace_trust`, `extension`. Unknown top-level keys are carried
//! through decode and re-encode untouched.

mod card;
mod extensions;
mod mapping;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::canonical;

pub use card::{agent_card, AgentCard, DISCOVERY_PATH, INGEST_PATH};
pub use extensions::{ExtensionRegistry, ExtensionSpec, BUILTIN_EXTENSIONS};
pub use mapping::{to_duty, to_duty_with, ToDutyError};

pub const ACE_VERSION: &str = "0.1";

/// The four message categories an institution may send.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    TemporalObligation,
    CommercialOpportunity,
    RewardsSignal,
    SocialPlatformUpdate,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::TemporalObligation,
        Category::CommercialOpportunity,
        Category::RewardsSignal,
        Category::SocialPlatformUpdate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::TemporalObligation => "TemporalObligation",
            Category::CommercialOpportunity => "CommercialOpportunity",
            Category::RewardsSignal => "RewardsSignal",
            Category::SocialPlatformUpdate => "SocialPlatformUpdate",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sender {
    pub institution_name: String,
    pub domain_tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UrgencyClass {
    Low,
    Normal,
    High,
    Critical,
}

impl UrgencyClass {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "Low" => Some(UrgencyClass::Low),
            "Normal" => Some(UrgencyClass::Normal),
            "High" => Some(UrgencyClass::High),
            "Critical" => Some(UrgencyClass::Critical),
            _ => None,
        }
    }
}

/// ACE-TEMP: when the obligation falls due and when acting is best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AceTemp {
    pub deadline: DateTime<Utc>,
    pub optimal_window_start: DateTime<Utc>,
    pub optimal_window_end: DateTime<Utc>,
    pub urgency_class: UrgencyClass,
}

/// ACE-VALUE: what is at stake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AceValue {
    pub amount_minor: u64,
    pub currency: String,
    pub benefit_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_rule: Option<String>,
}

/// ACE-SCOPE: what the agent may do on the user's behalf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AceScope {
    pub permitted_actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requires_approval_above_minor: Option<u64>,
}

/// ACE-TRUST: disclosures about the sender's interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AceTrust {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliate_disclosure: Option<String>,
    pub commission_disclosed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendation_basis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub domain: String,
    pub payload: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AceEnvelope {
    pub ace_version: String,
    pub message_id: String,
    pub sender: Sender,
    pub category: Category,
    pub ace_temp: AceTemp,
    pub ace_value: AceValue,
    pub ace_scope: AceScope,
    pub ace_trust: AceTrust,
    pub extension: Extension,
    /// Unrecognized top-level fields, preserved for re-encoding.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// One problem found while decoding or validating an envelope.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum AceError {
    #[error("malformed syntax: {detail}")]
    MalformedSyntax { detail: String },
    #[error("mandatory schema missing: {schema}")]
    MandatorySchemaMissing { schema: String },
    #[error("{path}: {detail}")]
    SchemaInvariantViolation { path: String, detail: String },
    #[error("unknown extension domain: {name}")]
    UnknownExtensionDomain { name: String },
}

impl AceError {
    pub fn code(&self) -> &'static str {
        match self {
            AceError::MalformedSyntax { .. } => "MalformedSyntax",
            AceError::MandatorySchemaMissing { .. } => "MandatorySchemaMissing",
            AceError::SchemaInvariantViolation { .. } => "SchemaInvariantViolation",
            AceError::UnknownExtensionDomain { .. } => "UnknownExtensionDomain",
        }
    }

    fn violation(path: impl Into<String>, detail: impl Into<String>) -> Self {
        AceError::SchemaInvariantViolation {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid envelope: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidEnvelope(pub Vec<AceError>);

/// Core schema keys and the names they are reported under.
pub const CORE_SCHEMAS: [(&str, &str); 4] = [
    ("ace_temp", "ACE-TEMP"),
    ("ace_value", "ACE-VALUE"),
    ("ace_scope", "ACE-SCOPE"),
    ("ace_trust", "ACE-TRUST"),
];

const KNOWN_KEYS: [&str; 9] = [
    "ace_version",
    "message_id",
    "sender",
    "category",
    "ace_temp",
    "ace_value",
    "ace_scope",
    "ace_trust",
    "extension",
];

/// Decoder/encoder bound to an extension registry.
#[derive(Debug, Clone, Default)]
pub struct Codec {
    pub registry: ExtensionRegistry,
}

impl Codec {
    pub fn new(registry: ExtensionRegistry) -> Self {
        Codec { registry }
    }

    /// Parses and validates, reporting every violation found.
    pub fn decode(&self, text: &str) -> Result<AceEnvelope, Vec<AceError>> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            vec![AceError::MalformedSyntax {
                detail: e.to_string(),
            }]
        })?;
        self.decode_value(&value)
    }

    pub fn decode_value(&self, value: &Value) -> Result<AceEnvelope, Vec<AceError>> {
        let Some(obj) = value.as_object() else {
            return Err(vec![AceError::MalformedSyntax {
                detail: "envelope must be a JSON object".into(),
            }]);
        };
        let mut v = Validator::default();
        let env = v.envelope(obj, &self.registry);
        match env {
            Some(env) if v.errors.is_empty() => Ok(env),
            _ => Err(v.errors),
        }
    }

    /// Canonical wire text. Fails if the envelope breaks any schema invariant.
    pub fn encode(&self, env: &AceEnvelope) -> Result<String, InvalidEnvelope> {
        let value = serde_json::to_value(env).map_err(|e| {
            InvalidEnvelope(vec![AceError::MalformedSyntax {
                detail: e.to_string(),
            }])
        })?;
        self.decode_value(&value).map_err(InvalidEnvelope)?;
        Ok(canonical::value_to_string(&value))
    }

    /// All violations in `env`, empty when valid.
    pub fn validate(&self, env: &AceEnvelope) -> Vec<AceError> {
        match serde_json::to_value(env) {
            Ok(v) => self.decode_value(&v).err().unwrap_or_default(),
            Err(e) => vec![AceError::MalformedSyntax { detail: e.to_string() }],
        }
    }
}

/// Decodes with the built-in extension registry.
pub fn decode(text: &str) -> Result<AceEnvelope, Vec<AceError>> {
    Codec::default().decode(text)
}

/// Encodes with the built-in extension registry.
pub fn encode(env: &AceEnvelope) -> Result<String, InvalidEnvelope> {
    Codec::default().encode(env)
}

#[derive(Default)]
struct Validator {
    errors: Vec<AceError>,
}

impl Validator {
    fn bad(&mut self, path: &str, detail: impl Into<String>) {
        self.errors.push(AceError::violation(path, detail));
    }

    fn object<'a>(&mut self, parent: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Map<String, Value>> {
        match parent.get(key) {
            None | Some(Value::Null) => {
                self.bad(path, "required object missing");
                None
            }
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.bad(path, "must be an object");
                None
            }
        }
    }

    fn string(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        match obj.get(key) {
            None | Some(Value::Null) => {
                self.bad(path, "required field missing");
                None
            }
            Some(Value::String(s)) if s.trim().is_empty() => {
                self.bad(path, "must be non-empty");
                None
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.bad(path, "must be a string");
                None
            }
        }
    }

    fn opt_string(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<Option<String>> {
        match obj.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(Value::String(s)) => Some(Some(s.clone())),
            Some(_) => {
                self.bad(path, "must be a string");
                None
            }
        }
    }

    fn uint(&mut self, obj: &Map<String, Value>, key: &str, path: &str, required: bool) -> Option<Option<u64>> {
        match obj.get(key) {
            None | Some(Value::Null) if !required => Some(None),
            None | Some(Value::Null) => {
                self.bad(path, "required field missing");
                None
            }
            Some(v) => match v.as_u64() {
                Some(n) => Some(Some(n)),
                None => {
                    self.bad(path, "must be a non-negative integer");
                    None
                }
            },
        }
    }

    fn timestamp(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<DateTime<Utc>> {
        let s = self.string(obj, key, path)?;
        match DateTime::parse_from_rfc3339(&s) {
            Ok(t) => Some(t.with_timezone(&Utc)),
            Err(e) => {
                self.bad(path, format!("not an RFC 3339 timestamp: {e}"));
                None
            }
        }
    }

    fn envelope(&mut self, obj: &Map<String, Value>, registry: &ExtensionRegistry) -> Option<AceEnvelope> {
        let version = self.string(obj, "ace_version", "ace_version");
        if let Some(v) = &version {
            if v != ACE_VERSION {
                self.bad("ace_version", format!("unsupported version {v:?}, expected {ACE_VERSION:?}"));
            }
        }
        let message_id = self.string(obj, "message_id", "message_id");
        let sender = self.object(obj, "sender", "sender").and_then(|s| {
            let name = self.string(s, "institution_name", "sender.institution_name");
            let tag = self.string(s, "domain_tag", "sender.domain_tag");
            Some(Sender {
                institution_name: name?,
                domain_tag: tag?,
            })
        });
        let category = match self.string(obj, "category", "category") {
            Some(c) => match Category::parse(&c) {
                Some(c) => Some(c),
                None => {
                    self.bad("category", format!("unknown category {c:?}"));
                    None
                }
            },
            None => None,
        };

        let mut schemas: [Option<&Map<String, Value>>; 4] = [None; 4];
        for (slot, (key, name)) in schemas.iter_mut().zip(CORE_SCHEMAS) {
            match obj.get(key) {
                None | Some(Value::Null) => self.errors.push(AceError::MandatorySchemaMissing { schema: name.into() }),
                Some(Value::Object(m)) => *slot = Some(m),
                Some(_) => self.bad(key, "must be an object"),
            }
        }
        let temp = schemas[0].and_then(|m| self.temp(m));
        let value = schemas[1].and_then(|m| self.value(m));
        let scope = schemas[2].and_then(|m| self.scope(m));
        let trust = schemas[3].and_then(|m| self.trust(m));
        let extension = self.object(obj, "extension", "extension").and_then(|m| self.extension(m, registry));

        let extra: BTreeMap<String, Value> = obj
            .iter()
            .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();

        Some(AceEnvelope {
            ace_version: version?,
            message_id: message_id?,
            sender: sender?,
            category: category?,
            ace_temp: temp?,
            ace_value: value?,
            ace_scope: scope?,
            ace_trust: trust?,
            extension: extension?,
            extra,
        })
    }

    fn temp(&mut self, m: &Map<String, Value>) -> Option<AceTemp> {
        let deadline = self.timestamp(m, "deadline", "ace_temp.deadline");
        let start = self.timestamp(m, "optimal_window_start", "ace_temp.optimal_window_start");
        let end = self.timestamp(m, "optimal_window_end", "ace_temp.optimal_window_end");
        let urgency = self.string(m, "urgency_class", "ace_temp.urgency_class").and_then(|u| {
            let parsed = UrgencyClass::parse(&u);
            if parsed.is_none() {
                self.bad("ace_temp.urgency_class", format!("unknown urgency class {u:?}"));
            }
            parsed
        });
        if let (Some(s), Some(e)) = (start, end) {
            if s > e {
                self.bad("ace_temp.optimal_window_start", "window start must not be after window end");
            }
        }
        if let (Some(e), Some(d)) = (end, deadline) {
            if e > d {
                self.bad("ace_temp.optimal_window_end", "window end must not be after the deadline");
            }
        }
        Some(AceTemp {
            deadline: deadline?,
            optimal_window_start: start?,
            optimal_window_end: end?,
            urgency_class: urgency?,
        })
    }

    fn value(&mut self, m: &Map<String, Value>) -> Option<AceValue> {
        let amount = self.uint(m, "amount_minor", "ace_value.amount_minor", true);
        let currency = self.string(m, "currency", "ace_value.currency");
        if let Some(c) = &currency {
            if c.len() != 3 || !c.bytes().all(|b| b.is_ascii_uppercase()) {
                self.bad("ace_value.currency", format!("{c:?} is not an ISO-4217 code"));
            }
        }
        let benefit = self.string(m, "benefit_type", "ace_value.benefit_type");
        let rule = self.opt_string(m, "return_rule", "ace_value.return_rule");
        Some(AceValue {
            amount_minor: amount??,
            currency: currency?,
            benefit_type: benefit?,
            return_rule: rule?,
        })
    }

    fn scope(&mut self, m: &Map<String, Value>) -> Option<AceScope> {
        let actions = match m.get("permitted_actions") {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    let path = format!("ace_scope.permitted_actions[{i}]");
                    match item.as_str() {
                        Some("") => self.bad(&path, "token must be non-empty"),
                        Some(s) if s.chars().any(|c| c.is_uppercase()) => self.bad(&path, "token must be lowercase"),
                        Some(s) => out.push(s.to_owned()),
                        None => self.bad(&path, "token must be a string"),
                    }
                }
                (out.len() == items.len()).then_some(out)
            }
            None | Some(Value::Null) => {
                self.bad("ace_scope.permitted_actions", "required field missing");
                None
            }
            Some(_) => {
                self.bad("ace_scope.permitted_actions", "must be an array");
                None
            }
        };
        let approval = self.uint(m, "requires_approval_above_minor", "ace_scope.requires_approval_above_minor", false);
        Some(AceScope {
            permitted_actions: actions?,
            requires_approval_above_minor: approval?,
        })
    }

    fn trust(&mut self, m: &Map<String, Value>) -> Option<AceTrust> {
        let affiliate = self.opt_string(m, "affiliate_disclosure", "ace_trust.affiliate_disclosure");
        let disclosed = match m.get("commission_disclosed") {
            Some(Value::Bool(b)) => Some(*b),
            None | Some(Value::Null) => {
                self.bad("ace_trust.commission_disclosed", "required field missing");
                None
            }
            Some(_) => {
                self.bad("ace_trust.commission_disclosed", "must be a boolean");
                None
            }
        };
        let basis = self.opt_string(m, "recommendation_basis", "ace_trust.recommendation_basis");
        if disclosed == Some(true) && matches!(affiliate, Some(None)) {
            self.bad("ace_trust.affiliate_disclosure", "required when commission_disclosed is true");
        }
        Some(AceTrust {
            affiliate_disclosure: affiliate?,
            commission_disclosed: disclosed?,
            recommendation_basis: basis?,
        })
    }

    fn extension(&mut self, m: &Map<String, Value>, registry: &ExtensionRegistry) -> Option<Extension> {
        let domain = self.string(m, "domain", "extension.domain");
        let payload = match m.get("payload") {
            Some(Value::Object(p)) => Some(p.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<BTreeMap<_, _>>()),
            None | Some(Value::Null) => {
                self.bad("extension.payload", "required object missing");
                None
            }
            Some(_) => {
                self.bad("extension.payload", "must be an object");
                None
            }
        };
        let domain = domain?;
        match registry.get(&domain) {
            None => {
                self.errors.push(AceError::UnknownExtensionDomain { name: domain.clone() });
                return None;
            }
            Some(spec) => {
                if let Some(p) = &payload {
                    for key in &spec.required_keys {
                        if !p.contains_key(key) {
                            self.bad(&format!("extension.payload.{key}"), format!("required by {domain}"));
                        }
                    }
                }
            }
        }
        Some(Extension {
            domain,
            payload: payload?,
        })
    }
}

#[cfg(test)]
mod tests;
