use serde::{Deserialize, Serialize};

use super::{AgentRole, HistoryEntry};
use crate::session::{ChatMessage, MessageRole, Notice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryLimits {
    pub max_messages: usize,
    pub max_chars: usize,
}

impl Default for HistoryLimits {
    fn default() -> Self {
        Self {
            max_messages: 200,
            max_chars: 60_000,
        }
    }
}

/// How a message's author is presented to a model. Agents appear under
/// their role label so the facilitator reads them as other participants.
pub fn label_for(message: &ChatMessage) -> String {
    match message.role {
        MessageRole::User => message.author.clone(),
        MessageRole::Facilitator => AgentRole::Facilitator.label().to_string(),
        MessageRole::Designer => AgentRole::Designer.label().to_string(),
        MessageRole::Planner => AgentRole::Planner.label().to_string(),
        MessageRole::System => "System".to_string(),
    }
}

/// Newest messages that fit within `limits`, oldest first. The round-1 scene
/// announcement is always kept. The newest message is always included, even
/// if it alone exceeds the character budget.
pub fn build_history(messages: &[ChatMessage], limits: &HistoryLimits) -> Vec<HistoryEntry> {
    let pinned = messages
        .iter()
        .position(|m| m.notice == Some(Notice::SceneSaved) && m.round_index == 1);

    let mut start = suffix_start(messages, limits.max_messages, limits.max_chars);
    let mut keep_pinned = false;
    if let Some(p) = pinned {
        if p < start {
            let pinned_chars = messages[p].content.chars().count();
            start = suffix_start(
                &messages[p + 1..],
                limits.max_messages.saturating_sub(1),
                limits.max_chars.saturating_sub(pinned_chars),
            ) + p
                + 1;
            keep_pinned = true;
        }
    }

    let pinned_entry = pinned.filter(|_| keep_pinned).map(|p| &messages[p]);
    pinned_entry
        .into_iter()
        .chain(messages[start..].iter())
        .map(|m| HistoryEntry {
            label: label_for(m),
            content: m.content.clone(),
        })
        .collect()
}

fn suffix_start(messages: &[ChatMessage], max_messages: usize, max_chars: usize) -> usize {
    let mut chars = 0usize;
    let mut start = messages.len();
    for (i, m) in messages.iter().enumerate().rev() {
        let len = m.content.chars().count();
        let taken = messages.len() - i - 1;
        if taken >= max_messages || (taken > 0 && chars + len > max_chars) {
            break;
        }
        chars += len;
        start = i;
    }
    start
}
