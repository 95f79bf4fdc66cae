use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentActivation, AgentRole};
use crate::error::{Error, Result};

pub const MAX_USERNAME_CHARS: usize = 64;
pub const MAX_ROOM_ID_CHARS: usize = 128;

/// A participant name: trimmed, non-empty, at most 64 characters,
/// compared case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Username(String);

impl Username {
    pub fn parse(raw: &str) -> Result<Self> {
        let name = raw.trim();
        if name.is_empty() {
            return Err(Error::InvalidUsername("username is empty".into()));
        }
        if name.chars().count() > MAX_USERNAME_CHARS {
            return Err(Error::InvalidUsername(format!(
                "username exceeds {MAX_USERNAME_CHARS} characters"
            )));
        }
        Ok(Self(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Username {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Username {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn validate_room_id(raw: &str) -> Result<&str> {
    if raw.is_empty() || raw.trim() != raw {
        return Err(Error::InvalidRoomId(
            "room id must be non-empty without surrounding whitespace".into(),
        ));
    }
    if raw.chars().count() > MAX_ROOM_ID_CHARS || raw.chars().any(char::is_control) {
        return Err(Error::InvalidRoomId(format!(
            "room id must be at most {MAX_ROOM_ID_CHARS} printable characters"
        )));
    }
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomStatus {
    Lobby,
    Active,
    Ended,
}

/// Progress of the facilitator synthesis claimed for a completed round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilitationState {
    /// Claimed; the claim holder is invoking the provider.
    Pending,
    Done,
    Failed,
}

/// Authoritative per-room state, stored under `rooms/<room_id>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomDocument {
    pub room_id: String,
    /// Join order.
    pub participants: Vec<Username>,
    pub readiness: BTreeMap<Username, bool>,
    pub status: RoomStatus,
    pub current_round: u32,
    /// Users who have posted at least once in `current_round`.
    pub responded_users: BTreeSet<Username>,
    pub agent_roster: Vec<AgentActivation>,
    /// Sequence number the next event will receive. Starts at 1.
    pub next_seq: u64,
    pub scene_refs: Vec<String>,
    pub artifact_refs: Vec<String>,
    pub prompt_set_refs: Vec<String>,
    /// Facilitator claims keyed by completed round.
    pub facilitation: BTreeMap<u32, FacilitationState>,
    pub created_at_ms: i64,
    pub ended_at_ms: Option<i64>,
}

impl RoomDocument {
    pub fn new(room_id: &str, creator: Username, now_ms: i64) -> Self {
        Self {
            room_id: room_id.to_string(),
            readiness: BTreeMap::from([(creator.clone(), false)]),
            participants: vec![creator],
            status: RoomStatus::Lobby,
            current_round: 1,
            responded_users: BTreeSet::new(),
            agent_roster: vec![AgentActivation {
                agent_role: AgentRole::Facilitator,
                activation_round: 1,
            }],
            next_seq: 1,
            scene_refs: Vec::new(),
            artifact_refs: Vec::new(),
            prompt_set_refs: Vec::new(),
            facilitation: BTreeMap::new(),
            created_at_ms: now_ms,
            ended_at_ms: None,
        }
    }

    pub fn is_participant(&self, user: &Username) -> bool {
        self.participants.contains(user)
    }

    pub fn require_participant(&self, user: &Username) -> Result<()> {
        if self.is_participant(user) {
            Ok(())
        } else {
            Err(Error::UnknownUser(user.to_string()))
        }
    }

    pub fn require_active(&self) -> Result<()> {
        if self.status == RoomStatus::Active {
            Ok(())
        } else {
            Err(Error::RoomNotActive)
        }
    }

    pub fn join(&mut self, user: Username, max_participants: usize) -> Result<()> {
        if self.status != RoomStatus::Lobby {
            return Err(Error::RoomClosed(self.room_id.clone()));
        }
        if self.is_participant(&user) {
            return Err(Error::DuplicateUsername(user.to_string()));
        }
        if self.participants.len() >= max_participants {
            return Err(Error::RoomFull {
                room: self.room_id.clone(),
                max: max_participants,
            });
        }
        self.readiness.insert(user.clone(), false);
        self.participants.push(user);
        Ok(())
    }

    /// Returns `true` when this call moved the room out of the lobby.
    pub fn set_ready(&mut self, user: &Username, ready: bool) -> Result<bool> {
        if self.status != RoomStatus::Lobby {
            return Err(Error::NotInLobby);
        }
        self.require_participant(user)?;
        self.readiness.insert(user.clone(), ready);
        if self.readiness.values().all(|r| *r) {
            self.status = RoomStatus::Active;
            self.responded_users.clear();
            return Ok(true);
        }
        Ok(false)
    }

    /// Records a user contribution to the current round. When it was the last
    /// missing contribution the round advances and a facilitator claim is
    /// recorded; the completed round number is returned.
    pub fn record_contribution(&mut self, user: &Username) -> Result<Option<u32>> {
        self.require_active()?;
        self.require_participant(user)?;
        self.responded_users.insert(user.clone());
        if self.participants.iter().all(|p| self.responded_users.contains(p)) {
            let completed = self.current_round;
            self.current_round += 1;
            self.responded_users.clear();
            self.facilitation.insert(completed, FacilitationState::Pending);
            return Ok(Some(completed));
        }
        Ok(None)
    }

    /// Advances the round without facilitation if the room is still in
    /// `from_round`. Returns `true` if the round moved.
    pub fn skip_round(&mut self, user: &Username, from_round: u32) -> Result<bool> {
        self.require_active()?;
        self.require_participant(user)?;
        if self.current_round != from_round {
            return Ok(false);
        }
        self.current_round += 1;
        self.responded_users.clear();
        Ok(true)
    }

    pub fn end(&mut self, user: &Username, now_ms: i64) -> Result<()> {
        self.require_active()?;
        self.require_participant(user)?;
        self.status = RoomStatus::Ended;
        self.ended_at_ms = Some(now_ms);
        Ok(())
    }

    pub fn allocate_seq(&mut self) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        seq
    }

    pub fn activation_of(&self, role: AgentRole) -> Option<u32> {
        self.agent_roster
            .iter()
            .find(|a| a.agent_role == role)
            .map(|a| a.activation_round)
    }

    /// Structural invariants that every committed document must satisfy.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.responded_users.iter().all(|u| self.is_participant(u)) {
            return Err("responded_users is not a subset of participants".into());
        }
        if self.current_round < 1 {
            return Err("current_round below 1".into());
        }
        if self.status == RoomStatus::Lobby
            && (self.current_round != 1 || !self.responded_users.is_empty())
        {
            return Err("lobby room has progressed rounds or responses".into());
        }
        if self.activation_of(AgentRole::Facilitator) != Some(1) {
            return Err("facilitator missing from roster".into());
        }
        let unique: BTreeSet<_> = self.participants.iter().collect();
        if unique.len() != self.participants.len() {
            return Err("duplicate participant".into());
        }
        if self.next_seq < 1 {
            return Err("next_seq below 1".into());
        }
        Ok(())
    }
}
