use serde::{Deserialize, Serialize};

use super::{Category, ExtensionRegistry, ACE_VERSION};
use crate::canonical;

pub const INGEST_PATH: &str = "/ace/ingest";
pub const DISCOVERY_PATH: &str = "/ace/.well-known/agent.json";

/// Discovery document describing what the agent accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentCard {
    pub name: String,
    pub description: String,
    pub ace_version: String,
    pub categories: Vec<Category>,
    pub extensions: Vec<String>,
    pub ingest_path: String,
    pub discovery_path: String,
}

impl AgentCard {
    pub fn to_canonical(&self) -> String {
        canonical::to_string(self).expect("agent card serializes")
    }
}

pub fn agent_card(registry: &ExtensionRegistry) -> AgentCard {
    AgentCard {
        name: "jagarin".to_owned(),
        description: "Personal duty agent accepting structured institutional messages".to_owned(),
        ace_version: ACE_VERSION.to_owned(),
        categories: Category::ALL.to_vec(),
        extensions: registry.names().map(str::to_owned).collect(),
        ingest_path: INGEST_PATH.to_owned(),
        discovery_path: DISCOVERY_PATH.to_owned(),
    }
}
