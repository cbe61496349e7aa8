use serde::{Deserialize, Serialize};

/// Built-in extension domains and the payload key each one requires.
pub const BUILTIN_EXTENSIONS: [(&str, &str); 11] = [
    ("FINANCIAL", "account_type"),
    ("HEALTHCARE", "care_type"),
    ("RETAIL", "fulfillment"),
    ("SUPPORT", "ticket_id"),
    ("SERVICES", "service_type"),
    ("GOVERNMENT", "agency"),
    ("TRAVEL", "booking_ref"),
    ("PROFESSIONAL", "engagement_type"),
    ("COMMUNITY", "group"),
    ("SOCIAL-PLATFORM", "platform"),
    ("ECOMMERCE", "fulfillment"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionSpec {
    pub name: String,
    #[serde(default)]
    pub required_keys: Vec<String>,
}

/// Registered domain extensions. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionRegistry {
    specs: Vec<ExtensionSpec>,
}

impl Default for ExtensionRegistry {
    fn default() -> Self {
        ExtensionRegistry {
            specs: BUILTIN_EXTENSIONS
                .iter()
                .map(|(n, k)| ExtensionSpec {
                    name: (*n).to_owned(),
                    required_keys: vec![(*k).to_owned()],
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct ExtensionFile {
    extensions: Vec<ExtensionSpec>,
}

impl ExtensionRegistry {
    /// Adds (or replaces) a community extension.
    pub fn with_extension(mut self, spec: ExtensionSpec) -> Self {
        let spec = ExtensionSpec {
            name: spec.name.to_ascii_uppercase(),
            ..spec
        };
        match self.specs.iter_mut().find(|s| s.name == spec.name) {
            Some(s) => *s = spec,
            None => self.specs.push(spec),
        }
        self
    }

    /// Adds extensions from a JSON document `{"extensions":[{"name":..,"required_keys":[..]}]}`.
    pub fn with_config(self, json: &str) -> Result<Self, serde_json::Error> {
        let file: ExtensionFile = serde_json::from_str(json)?;
        Ok(file.extensions.into_iter().fold(self, Self::with_extension))
    }

    pub fn get(&self, name: &str) -> Option<&ExtensionSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}
