use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentRole;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure reported by an external model, imagery, or image-revision service.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind}: {message}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Timeout,
    Rejected,
    Unavailable,
    MalformedResponse,
}

impl std::fmt::Display for ProviderErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Timeout => "timeout",
            Self::Rejected => "rejected",
            Self::Unavailable => "unavailable",
            Self::MalformedResponse => "malformed response",
        })
    }
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn unavailable(message: impl Into<String>) -> Self {
        Self::new(ProviderErrorKind::Unavailable, message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid username: {0}")]
    InvalidUsername(String),
    #[error("invalid room id: {0}")]
    InvalidRoomId(String),
    #[error("username {0:?} is already taken in this room")]
    DuplicateUsername(String),
    #[error("room {0} is no longer accepting participants")]
    RoomClosed(String),
    #[error("room {room} is full ({max} participants)")]
    RoomFull { room: String, max: usize },
    #[error("room {0} does not exist")]
    UnknownRoom(String),
    #[error("{0:?} is not a participant of this room")]
    UnknownUser(String),
    #[error("room is not in the lobby")]
    NotInLobby,
    #[error("room is not active")]
    RoomNotActive,
    #[error("message content is empty")]
    EmptyContent,
    #[error("facilitator unavailable for round {round}: {source}")]
    FacilitatorUnavailable { round: u32, source: ProviderError },
    #[error("round {0} has no failed facilitation to retry")]
    NothingToRetry(u32),

    #[error("{0} is already registered in this room")]
    AlreadyRegistered(AgentRole),
    #[error("unknown agent role {0:?}")]
    UnknownAgentRole(String),
    #[error("{0} cannot be registered as an expert")]
    InvalidRole(AgentRole),
    #[error("registration phase {0} does not match the room status")]
    InvalidPhase(&'static str),
    #[error("{role} is not active in round {current_round} (activation round {activation_round:?})")]
    AgentNotActive {
        role: AgentRole,
        activation_round: Option<u32>,
        current_round: u32,
    },
    #[error("chat provider failed: {0}")]
    Provider(ProviderError),
    #[error("discussion history is empty")]
    EmptyHistory,

    #[error("prompt text is empty")]
    EmptyText,
    #[error("prompt set {0} does not exist")]
    UnknownPromptSet(String),
    #[error("edit index {index} is out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("prompt set has no items")]
    EmptyPromptSet,

    #[error("invalid view parameters: {0}")]
    InvalidViewParams(String),
    #[error("scene provider failed: {0}")]
    SceneProvider(ProviderError),
    #[error("image provider failed: {0}")]
    ImageProvider(ProviderError),
    #[error("artifact {0} does not exist")]
    UnknownArtifact(String),
    #[error("snapshot {0} does not exist")]
    UnknownSnapshot(String),
    #[error("room has no image to revise")]
    NoSourceImage,

    #[error("transaction on {key} still conflicting after {attempts} attempts")]
    ConflictExhausted { key: String, attempts: u32 },
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("malformed export archive: {0}")]
    MalformedArchive(String),
}

impl Error {
    /// Stable machine-readable identifier, part of the public HTTP contract.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidUsername(_) => "invalid_username",
            Self::InvalidRoomId(_) => "invalid_room_id",
            Self::DuplicateUsername(_) => "duplicate_username",
            Self::RoomClosed(_) => "room_closed",
            Self::RoomFull { .. } => "room_full",
            Self::UnknownRoom(_) => "unknown_room",
            Self::UnknownUser(_) => "unknown_user",
            Self::NotInLobby => "not_in_lobby",
            Self::RoomNotActive => "room_not_active",
            Self::EmptyContent => "empty_content",
            Self::FacilitatorUnavailable { .. } => "facilitator_unavailable",
            Self::NothingToRetry(_) => "nothing_to_retry",
            Self::AlreadyRegistered(_) => "already_registered",
            Self::UnknownAgentRole(_) => "unknown_agent_role",
            Self::InvalidRole(_) => "invalid_role",
            Self::InvalidPhase(_) => "invalid_phase",
            Self::AgentNotActive { .. } => "agent_not_active",
            Self::Provider(_) => "provider_error",
            Self::EmptyHistory => "empty_history",
            Self::EmptyText => "empty_text",
            Self::UnknownPromptSet(_) => "unknown_prompt_set",
            Self::IndexOutOfRange { .. } => "index_out_of_range",
            Self::EmptyPromptSet => "empty_prompt_set",
            Self::InvalidViewParams(_) => "invalid_view_params",
            Self::SceneProvider(_) => "scene_provider_error",
            Self::ImageProvider(_) => "image_provider_error",
            Self::UnknownArtifact(_) => "unknown_artifact",
            Self::UnknownSnapshot(_) => "unknown_snapshot",
            Self::NoSourceImage => "no_source_image",
            Self::ConflictExhausted { .. } => "conflict_exhausted",
            Self::Storage(_) => "storage_error",
            Self::MalformedArchive(_) => "malformed_archive",
        }
    }

    /// Whether a client may reasonably retry the same request later.
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            Self::FacilitatorUnavailable { .. }
                | Self::Provider(_)
                | Self::SceneProvider(_)
                | Self::ImageProvider(_)
                | Self::ConflictExhausted { .. }
                | Self::Storage(_)
        )
    }

    pub(crate) fn storage(err: impl std::fmt::Display) -> Self {
        Self::Storage(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Self::Storage(format!("serialization: {err}"))
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Self::Storage(err.to_string())
    }
}
