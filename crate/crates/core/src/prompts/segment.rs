use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_string;
use crate::error::{Error, Result};
use crate::session::{ChatMessage, MessageRole};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMessage {
    pub author: String,
    pub role: MessageRole,
    pub content: String,
    pub round_index: u32,
}

/// Discussion excerpt handed to the prompt parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDocument {
    pub user_id: String,
    pub segment_id: String,
    pub messages: Vec<SegmentMessage>,
}

impl SegmentDocument {
    /// Canonical interchange bytes: sorted keys, compact, UTF-8.
    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("segment is always serializable")
    }

    pub fn contents(&self) -> Vec<String> {
        self.messages.iter().map(|m| m.content.clone()).collect()
    }
}

/// Serializes user and agent messages (System notices are dropped) in seq
/// order.
pub fn serialize_segment(history: &[ChatMessage], requesting_user: &str) -> Result<SegmentDocument> {
    let kept: Vec<&ChatMessage> = history
        .iter()
        .filter(|m| m.role != MessageRole::System)
        .collect();
    let (Some(first), Some(last)) = (kept.first(), kept.last()) else {
        return Err(Error::EmptyHistory);
    };
    let segment_id = format!("{}:{}-{}", first.room_id, first.seq, last.seq);
    Ok(SegmentDocument {
        user_id: requesting_user.to_string(),
        segment_id,
        messages: kept
            .into_iter()
            .map(|m| SegmentMessage {
                author: m.author.clone(),
                role: m.role,
                content: m.content.clone(),
                round_index: m.round_index,
            })
            .collect(),
    })
}
