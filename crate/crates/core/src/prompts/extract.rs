use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use super::{
    dedup_key, prompt_set_key, serialize_segment, validate_prompt, PromptGrammar, PromptItem,
    PromptOrigin, PromptSet, SegmentDocument, ValidationContext,
};
use crate::agents::{AgentConfig, AgentRole, ChatProvider, CompletionRequest, HistoryEntry};
use crate::canonical::derived_id;
use crate::error::{Error, Result};
use crate::session::Username;
use crate::workshop::{load_room, save_room, Workshop};

pub const MIN_PROMPTS: usize = 4;
pub const MAX_PROMPTS: usize = 6;

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-*•]\s+|[0-9]{1,2}[.)]\s+)").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub prompts: Vec<String>,
    pub degraded: bool,
    /// Provider calls made (1, or 2 after a re-request).
    pub attempts: u32,
}

/// Splits provider output into candidate lines, dropping blanks and any
/// leading bullet or enumeration marker.
pub fn parse_prompt_lines(output: &str) -> Vec<String> {
    output
        .lines()
        .map(str::trim)
        .map(|l| LIST_MARKER.replace(l, "").trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Asks the prompt parser for design prompts, keeping only lines that pass
/// the grammar. Under-production triggers one re-request; the union of both
/// answers is used and the result is marked degraded if still short.
pub fn extract_prompts(
    provider: &dyn ChatProvider,
    config: &AgentConfig,
    grammar: &PromptGrammar,
    segment: &SegmentDocument,
    usernames: &[String],
) -> Result<Extraction> {
    if segment.messages.is_empty() {
        return Err(Error::EmptyHistory);
    }
    debug_assert_eq!(config.agent_role, AgentRole::PromptParser);
    let request = CompletionRequest {
        system_prompt: config.system_prompt.clone(),
        history: vec![HistoryEntry {
            label: segment.user_id.clone(),
            content: segment.to_canonical_json(),
        }],
        params: config.params,
    };
    let transcript = segment.contents();
    let ctx = ValidationContext {
        usernames,
        transcript: &transcript,
    };

    let mut prompts = Vec::new();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while attempts < 2 {
        attempts += 1;
        let output = provider.complete(&request).map_err(Error::Provider)?;
        for line in parse_prompt_lines(&output) {
            if prompts.len() == MAX_PROMPTS {
                break;
            }
            let result = validate_prompt(&line, grammar, &ctx)?;
            if result.valid && seen.insert(dedup_key(&line)) {
                prompts.push(line);
            }
        }
        if prompts.len() >= MIN_PROMPTS {
            break;
        }
    }
    Ok(Extraction {
        degraded: prompts.len() < MIN_PROMPTS,
        prompts,
        attempts,
    })
}

impl Workshop {
    /// Extracts a prompt set from the room's discussion so far and stores it.
    pub fn generate_prompt_set(&self, room_id: &str, requested_by: &str) -> Result<PromptSet> {
        let user = Username::parse(requested_by)?;
        let room = self.room(room_id)?;
        room.require_participant(&user)?;
        room.require_active()?;
        let history = self.messages_in(room_id, 1, room.next_seq)?;
        let segment = serialize_segment(&history, user.as_str())?;
        let usernames: Vec<String> = room.participants.iter().map(|u| u.to_string()).collect();
        let extraction = extract_prompts(
            self.chat.as_ref(),
            self.personas.config(AgentRole::PromptParser),
            &self.grammar,
            &segment,
            &usernames,
        )?;

        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_active()?;
            let index = room.prompt_set_refs.len().to_string();
            let set = PromptSet {
                prompt_set_id: derived_id("ps", &[room_id, &index]),
                room_id: room_id.to_string(),
                source_segment: segment.segment_id.clone(),
                items: extraction
                    .prompts
                    .iter()
                    .map(|text| PromptItem {
                        text: text.clone(),
                        origin: PromptOrigin::Extracted,
                        valid: true,
                        violations: Vec::new(),
                    })
                    .collect(),
                created_round: room.current_round,
                degraded: extraction.degraded,
            };
            room.prompt_set_refs.push(set.prompt_set_id.clone());
            txn.put_as(&prompt_set_key(&set.prompt_set_id), &set)?;
            save_room(txn, &room)?;
            Ok(set)
        })
    }

    pub fn prompt_set(&self, prompt_set_id: &str) -> Result<PromptSet> {
        let record = self
            .store
            .get(&prompt_set_key(prompt_set_id))?
            .ok_or_else(|| Error::UnknownPromptSet(prompt_set_id.to_string()))?;
        Ok(serde_json::from_value(record.value)?)
    }
}
