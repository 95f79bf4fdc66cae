//! Room lifecycle and the round-based discussion protocol.
//!
//! A round completes when every participant has posted at least once. The
//! transaction that stores the last missing contribution also advances the
//! round and records a facilitator claim for the completed round; because
//! that transaction can commit only once per round, its caller is the single
//! claim holder and the only one that invokes the facilitator. The provider
//! call happens after the commit, outside any transaction.

mod message;
mod room;

use serde::{Deserialize, Serialize};

use crate::agents::{invoke_facilitator, AgentRole};
use crate::error::{Error, Result};
use crate::scene::ImageArtifact;
use crate::workshop::{append_message, load_room, room_key, save_room, Draft, Workshop};

pub use message::{ChatMessage, MessageRole, Notice, SYSTEM_AUTHOR};
pub(crate) use message::message_key;
pub use message::message_prefix;
pub use room::{
    validate_room_id, FacilitationState, RoomDocument, RoomStatus, Username, MAX_ROOM_ID_CHARS,
    MAX_USERNAME_CHARS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostOutcome {
    pub stored_message: ChatMessage,
    pub round_completed: bool,
    pub facilitator_reply: Option<ChatMessage>,
    pub new_round: Option<u32>,
    /// Set when the round advanced but the facilitator call failed; a
    /// System message records the failure and the round can be retried.
    pub facilitator_failure: Option<String>,
}

/// Everything a polling client has not seen yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomDelta {
    pub room: RoomDocument,
    pub messages: Vec<ChatMessage>,
    pub artifacts: Vec<ImageArtifact>,
}

impl Workshop {
    /// Creates the room on first join, otherwise adds `username` to its lobby.
    pub fn create_or_join_room(&self, username: &str, room_id: &str) -> Result<RoomDocument> {
        let user = Username::parse(username)?;
        validate_room_id(room_id)?;
        let max = self.limits.max_participants;
        let now = self.now_ms();
        self.transaction(|txn| {
            let room = match txn.get_as::<RoomDocument>(&room_key(room_id))? {
                None => RoomDocument::new(room_id, user.clone(), now),
                Some(mut room) => {
                    room.join(user.clone(), max)?;
                    room
                }
            };
            save_room(txn, &room)?;
            Ok(room)
        })
    }

    pub fn set_ready(&self, room_id: &str, username: &str, ready: bool) -> Result<RoomDocument> {
        let user = Username::parse(username)?;
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.set_ready(&user, ready)?;
            save_room(txn, &room)?;
            Ok(room)
        })
    }

    pub fn post_message(&self, room_id: &str, username: &str, content: &str) -> Result<PostOutcome> {
        let user = Username::parse(username)?;
        let content = content.trim();
        if content.is_empty() {
            return Err(Error::EmptyContent);
        }
        let now = self.now_ms();
        let (stored, completed) = self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_active()?;
            room.require_participant(&user)?;
            let round = room.current_round;
            let message = append_message(
                txn,
                &mut room,
                Draft {
                    author: user.as_str(),
                    role: MessageRole::User,
                    content: content.to_string(),
                    round_index: round,
                    notice: None,
                    artifact_ref: None,
                },
                now,
            )?;
            let completed = room.record_contribution(&user)?;
            save_room(txn, &room)?;
            Ok((message, completed))
        })?;

        let Some(completed_round) = completed else {
            return Ok(PostOutcome {
                stored_message: stored,
                round_completed: false,
                facilitator_reply: None,
                new_round: None,
                facilitator_failure: None,
            });
        };

        let (reply, failure) = match self.facilitate(room_id, completed_round, stored.seq + 1) {
            Ok(reply) => (Some(reply), None),
            Err(Error::FacilitatorUnavailable { source, .. }) => (None, Some(source.to_string())),
            Err(e) => return Err(e),
        };
        Ok(PostOutcome {
            stored_message: stored,
            round_completed: true,
            facilitator_reply: reply,
            new_round: Some(completed_round + 1),
            facilitator_failure: failure,
        })
    }

    /// Re-invokes the facilitator for a round whose synthesis failed.
    pub fn retry_facilitator(&self, room_id: &str, username: &str, round: u32) -> Result<ChatMessage> {
        let user = Username::parse(username)?;
        let upto = self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_participant(&user)?;
            if room.facilitation.get(&round) != Some(&FacilitationState::Failed) {
                return Err(Error::NothingToRetry(round));
            }
            room.facilitation.insert(round, FacilitationState::Pending);
            save_room(txn, &room)?;
            Ok(room.next_seq)
        })?;
        self.facilitate(room_id, round, upto)
    }

    /// Runs the claimed facilitation for `round` over messages with
    /// `seq < upto_seq` and stores its outcome.
    fn facilitate(&self, room_id: &str, round: u32, upto_seq: u64) -> Result<ChatMessage> {
        let history = self.messages_in(room_id, 1, upto_seq)?;
        let config = self.personas.config(AgentRole::Facilitator);
        let outcome = invoke_facilitator(self.chat.as_ref(), config, &history, round, &self.limits.history);
        let now = self.now_ms();
        match outcome {
            Ok(reply) => self.transaction(|txn| {
                let mut room = load_room(txn, room_id)?;
                if room.facilitation.get(&round) != Some(&FacilitationState::Pending) {
                    return Err(Error::Storage(format!(
                        "facilitation claim for round {round} was lost"
                    )));
                }
                room.facilitation.insert(round, FacilitationState::Done);
                let msg = append_message(
                    txn,
                    &mut room,
                    Draft {
                        author: AgentRole::Facilitator.label(),
                        role: MessageRole::Facilitator,
                        content: reply.content.clone(),
                        round_index: round,
                        notice: None,
                        artifact_ref: None,
                    },
                    now,
                )?;
                save_room(txn, &room)?;
                Ok(msg)
            }),
            Err(Error::Provider(source)) => {
                tracing::warn!(room_id, round, error = %source, "facilitator call failed");
                self.transaction(|txn| {
                    let mut room = load_room(txn, room_id)?;
                    room.facilitation.insert(round, FacilitationState::Failed);
                    append_message(
                        txn,
                        &mut room,
                        Draft::system(
                            format!("The AI facilitator could not summarize round {round}: {source}"),
                            round,
                            Notice::FacilitatorFailed,
                        ),
                        now,
                    )?;
                    save_room(txn, &room)
                })?;
                Err(Error::FacilitatorUnavailable { round, source })
            }
            Err(other) => Err(other),
        }
    }

    /// Advances the round without facilitation. `from_round` is the round the
    /// caller saw; if the room has already moved on this is a no-op, so
    /// concurrent initiations advance the round once.
    pub fn start_new_round(&self, room_id: &str, username: &str, from_round: u32) -> Result<RoomDocument> {
        let user = Username::parse(username)?;
        let now = self.now_ms();
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            if !room.skip_round(&user, from_round)? {
                return Ok(room);
            }
            let round = room.current_round;
            append_message(
                txn,
                &mut room,
                Draft::system(
                    format!("{user} started round {round} before everyone had contributed to round {from_round}."),
                    round,
                    Notice::RoundSkipped,
                ),
                now,
            )?;
            save_room(txn, &room)?;
            Ok(room)
        })
    }

    /// Room snapshot plus every message and artifact with `seq > since_seq`.
    pub fn get_room_state(&self, room_id: &str, since_seq: u64) -> Result<RoomDelta> {
        let room = self.room(room_id)?;
        let messages = self.messages_in(room_id, since_seq + 1, room.next_seq)?;
        let artifacts = messages
            .iter()
            .filter_map(|m| m.artifact_ref.as_deref())
            .map(|id| self.artifact(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(RoomDelta {
            room,
            messages,
            artifacts,
        })
    }

    pub fn end_session(&self, room_id: &str, username: &str) -> Result<RoomDocument> {
        let user = Username::parse(username)?;
        let now = self.now_ms();
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.end(&user, now)?;
            save_room(txn, &room)?;
            Ok(room)
        })
    }
}
