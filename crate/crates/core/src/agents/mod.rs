//! Agent personas, the chat-completion provider interface, and the logic
//! that turns a room log into provider requests.

mod history;
mod ops;
pub mod provider;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use history::{build_history, label_for, HistoryLimits};
pub use ops::{invoke_agent, invoke_facilitator, AgentReply, RegistrationPhase};
pub use provider::{
    ChatProvider, CompletionRequest, FailingChatProvider, HistoryEntry, MockChatProvider,
    RecordingChatProvider, ScriptedChatProvider,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Facilitator,
    Designer,
    Planner,
    PromptParser,
}

impl AgentRole {
    pub const ALL: [AgentRole; 4] = [
        AgentRole::Facilitator,
        AgentRole::Designer,
        AgentRole::Planner,
        AgentRole::PromptParser,
    ];

    /// Label used for this agent's messages in provider requests.
    pub fn label(self) -> &'static str {
        match self {
            Self::Facilitator | Self::PromptParser => "AI Facilitator",
            Self::Designer => "AI Designer",
            Self::Planner => "AI Planner",
        }
    }

    pub fn is_expert(self) -> bool {
        matches!(self, Self::Designer | Self::Planner)
    }

    fn resource_name(self) -> &'static str {
        match self {
            Self::Facilitator => "facilitator.txt",
            Self::Designer => "designer.txt",
            Self::Planner => "planner.txt",
            Self::PromptParser => "prompt_parser.txt",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Facilitator => "facilitator",
            Self::Designer => "designer",
            Self::Planner => "planner",
            Self::PromptParser => "prompt_parser",
        })
    }
}

impl std::str::FromStr for AgentRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "facilitator" => Ok(Self::Facilitator),
            "designer" => Ok(Self::Designer),
            "planner" => Ok(Self::Planner),
            "prompt_parser" | "prompt-parser" => Ok(Self::PromptParser),
            other => Err(Error::UnknownAgentRole(other.to_string())),
        }
    }
}

/// When an agent joined a room's roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentActivation {
    pub agent_role: AgentRole,
    pub activation_round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
}

impl GenerationParams {
    /// Facilitation and prompt parsing: conservative sampling.
    pub const CONSERVATIVE: Self = Self {
        max_output_tokens: 1024,
        temperature: 0.35,
        top_p: 0.9,
    };

    /// Expert personas: more exploratory sampling.
    pub const EXPLORATORY: Self = Self {
        max_output_tokens: 1024,
        temperature: 0.85,
        top_p: 0.95,
    };

    pub fn for_role(role: AgentRole) -> Self {
        match role {
            AgentRole::Facilitator | AgentRole::PromptParser => Self::CONSERVATIVE,
            AgentRole::Designer | AgentRole::Planner => Self::EXPLORATORY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub agent_role: AgentRole,
    pub system_prompt: String,
    pub params: GenerationParams,
}

const BUILTIN_PROMPTS: [(AgentRole, &str); 4] = [
    (
        AgentRole::Facilitator,
        include_str!("../../prompts/v1/facilitator.txt"),
    ),
    (AgentRole::Designer, include_str!("../../prompts/v1/designer.txt")),
    (AgentRole::Planner, include_str!("../../prompts/v1/planner.txt")),
    (
        AgentRole::PromptParser,
        include_str!("../../prompts/v1/prompt_parser.txt"),
    ),
];

/// Version tag of the bundled prompt resources.
pub const PROMPT_VERSION: &str = "v1";

/// The four agent configurations a deployment runs with.
#[derive(Debug, Clone, PartialEq)]
pub struct Personas {
    configs: BTreeMap<AgentRole, AgentConfig>,
}

impl Personas {
    pub fn builtin() -> Self {
        let configs = BUILTIN_PROMPTS
            .iter()
            .map(|(role, text)| {
                (
                    *role,
                    AgentConfig {
                        agent_role: *role,
                        system_prompt: (*text).to_string(),
                        params: GenerationParams::for_role(*role),
                    },
                )
            })
            .collect();
        Self { configs }
    }

    /// Loads prompt texts from `<dir>/<role>.txt`, falling back to the
    /// bundled text for any file that is absent. Generation parameters are
    /// fixed per role.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut personas = Self::builtin();
        for role in AgentRole::ALL {
            let path = dir.join(role.resource_name());
            match std::fs::read_to_string(&path) {
                Ok(text) => {
                    personas
                        .configs
                        .get_mut(&role)
                        .expect("builtin covers every role")
                        .system_prompt = text;
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(Error::Storage(format!("reading {}: {e}", path.display())))
                }
            }
        }
        Ok(personas)
    }

    pub fn config(&self, role: AgentRole) -> &AgentConfig {
        &self.configs[&role]
    }

    pub fn system_prompt(&self, role: AgentRole) -> &str {
        &self.config(role).system_prompt
    }
}

impl Default for Personas {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Verbatim system prompt for a role from the bundled resources.
pub fn render_system_prompt(role: AgentRole) -> &'static str {
    BUILTIN_PROMPTS
        .iter()
        .find(|(r, _)| *r == role)
        .map(|(_, text)| *text)
        .expect("builtin covers every role")
}
