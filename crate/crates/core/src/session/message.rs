use serde::{Deserialize, Serialize};

use crate::agents::AgentRole;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageRole {
    User,
    Facilitator,
    Designer,
    Planner,
    System,
}

impl MessageRole {
    pub fn for_agent(role: AgentRole) -> Self {
        match role {
            AgentRole::Facilitator | AgentRole::PromptParser => Self::Facilitator,
            AgentRole::Designer => Self::Designer,
            AgentRole::Planner => Self::Planner,
        }
    }

    pub fn is_agent(self) -> bool {
        matches!(self, Self::Facilitator | Self::Designer | Self::Planner)
    }
}

/// Classifies System messages so downstream consumers can filter them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notice {
    SceneSaved,
    DesignGenerated,
    RoundSkipped,
    ExpertRegistered,
    FacilitatorFailed,
}

/// One entry in a room's ordered event log, stored under
/// `messages/<room_id>/<seq>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub room_id: String,
    pub seq: u64,
    /// Username for user messages, agent label otherwise.
    pub author: String,
    pub role: MessageRole,
    pub content: String,
    pub timestamp_ms: i64,
    pub round_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<Notice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact_ref: Option<String>,
}

pub const SYSTEM_AUTHOR: &str = "system";

pub(crate) fn message_key(room_id: &str, seq: u64) -> String {
    format!("messages/{room_id}/{seq:010}")
}

/// Store key prefix under which all of a room's messages live.
pub fn message_prefix(room_id: &str) -> String {
    format!("messages/{room_id}/")
}
