//! Discussion-to-prompt extraction: segment serialization, the prompt
//! grammar, provider-backed extraction, and user edits.

mod edit;
mod extract;
mod segment;
mod validate;

use serde::{Deserialize, Serialize};

pub use edit::{apply_edits, PromptEdit};
pub use extract::{extract_prompts, parse_prompt_lines, Extraction, MAX_PROMPTS, MIN_PROMPTS};
pub use segment::{serialize_segment, SegmentDocument, SegmentMessage};
pub use validate::{
    validate_prompt, word_count, PromptGrammar, ValidationContext, ValidationResult, Violation,
    MIN_SCANNED_USERNAME_CHARS, STRONG_VERBS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptOrigin {
    Extracted,
    UserAdded,
    UserEdited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptItem {
    pub text: String,
    pub origin: PromptOrigin,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

/// Ordered, editable design prompts derived from one discussion segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub prompt_set_id: String,
    pub room_id: String,
    pub source_segment: String,
    pub items: Vec<PromptItem>,
    pub created_round: u32,
    /// Extraction produced fewer than the minimum number of valid prompts.
    pub degraded: bool,
}

impl PromptSet {
    pub fn texts(&self) -> Vec<String> {
        self.items.iter().map(|i| i.text.clone()).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.items.iter().filter(|i| i.valid).count()
    }
}

pub(crate) fn prompt_set_key(id: &str) -> String {
    format!("prompt_sets/{id}")
}

/// Case- and whitespace-insensitive identity used for de-duplication.
pub(crate) fn dedup_key(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}
