use serde::{Deserialize, Serialize};

use super::{build_history, AgentActivation, AgentConfig, AgentRole, ChatProvider, CompletionRequest, HistoryLimits};
use crate::error::{Error, Result};
use crate::session::{ChatMessage, MessageRole, Notice, RoomStatus, Username};
use crate::workshop::{append_message, load_room, save_room, Draft, Workshop};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationPhase {
    /// Added from the lobby; participates from round 1.
    AtCreation,
    /// Added during discussion; participates from the next round.
    MidSession,
}

/// Generated agent text, before the room assigns it a seq.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentReply {
    pub role: MessageRole,
    pub round_index: u32,
    pub content: String,
}

/// Calls `provider` once with `config`'s prompt and parameters over the
/// (truncated) history.
pub fn invoke_agent(
    provider: &dyn ChatProvider,
    config: &AgentConfig,
    history: &[ChatMessage],
    limits: &HistoryLimits,
) -> Result<String> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let request = CompletionRequest {
        system_prompt: config.system_prompt.clone(),
        history: build_history(history, limits),
        params: config.params,
    };
    let text = provider.complete(&request).map_err(Error::Provider)?;
    Ok(text.trim().to_string())
}

/// Synthesizes a completed round from the accumulated discussion.
pub fn invoke_facilitator(
    provider: &dyn ChatProvider,
    config: &AgentConfig,
    history: &[ChatMessage],
    completed_round: u32,
    limits: &HistoryLimits,
) -> Result<AgentReply> {
    debug_assert_eq!(config.agent_role, AgentRole::Facilitator);
    if completed_round == 0 {
        return Err(Error::Storage("round numbers start at 1".into()));
    }
    let content = invoke_agent(provider, config, history, limits)?;
    Ok(AgentReply {
        role: MessageRole::Facilitator,
        round_index: completed_round,
        content,
    })
}

impl Workshop {
    pub fn register_expert(
        &self,
        room_id: &str,
        role: AgentRole,
        phase: RegistrationPhase,
    ) -> Result<AgentActivation> {
        if !role.is_expert() {
            return Err(Error::InvalidRole(role));
        }
        let now = self.now_ms();
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            if room.activation_of(role).is_some() {
                return Err(Error::AlreadyRegistered(role));
            }
            let activation_round = match (phase, room.status) {
                (_, RoomStatus::Ended) => return Err(Error::RoomNotActive),
                (RegistrationPhase::AtCreation, RoomStatus::Lobby) => 1,
                (RegistrationPhase::MidSession, RoomStatus::Active) => room.current_round + 1,
                (RegistrationPhase::AtCreation, _) => return Err(Error::InvalidPhase("at_creation")),
                (RegistrationPhase::MidSession, _) => return Err(Error::InvalidPhase("mid_session")),
            };
            let activation = AgentActivation {
                agent_role: role,
                activation_round,
            };
            room.agent_roster.push(activation);
            let round = room.current_round;
            append_message(
                txn,
                &mut room,
                Draft::system(
                    format!("{} joined the workshop and can respond from round {activation_round}.", role.label()),
                    round,
                    Notice::ExpertRegistered,
                ),
                now,
            )?;
            save_room(txn, &room)?;
            Ok(activation)
        })
    }

    /// Asks a registered expert for its view on the discussion so far. The
    /// reply is stored in the current round and does not count as a
    /// contribution.
    pub fn query_expert(&self, room_id: &str, role: AgentRole, requested_by: &str) -> Result<ChatMessage> {
        let user = Username::parse(requested_by)?;
        let room = self.room(room_id)?;
        room.require_participant(&user)?;
        room.require_active()?;
        check_activation(&room, role)?;

        let history = self.messages_in(room_id, 1, room.next_seq)?;
        let content = invoke_agent(self.chat.as_ref(), self.personas.config(role), &history, &self.limits.history)?;

        let now = self.now_ms();
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_active()?;
            check_activation(&room, role)?;
            let round = room.current_round;
            let msg = append_message(
                txn,
                &mut room,
                Draft {
                    author: role.label(),
                    role: MessageRole::for_agent(role),
                    content: content.clone(),
                    round_index: round,
                    notice: None,
                    artifact_ref: None,
                },
                now,
            )?;
            save_room(txn, &room)?;
            Ok(msg)
        })
    }
}

fn check_activation(room: &crate::session::RoomDocument, role: AgentRole) -> Result<()> {
    let activation = room.activation_of(role);
    match activation {
        Some(r) if role.is_expert() && room.current_round >= r => Ok(()),
        _ => Err(Error::AgentNotActive {
            role,
            activation_round: activation,
            current_round: room.current_round,
        }),
    }
}
