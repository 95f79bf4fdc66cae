use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{dedup_key, prompt_set_key, validate_prompt, PromptGrammar, PromptItem, PromptOrigin, PromptSet, ValidationContext};
use crate::error::{Error, Result};
use crate::workshop::Workshop;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum PromptEdit {
    Edit { index: usize, text: String },
    Remove { index: usize },
    Append { text: String },
}

fn user_item(text: &str, origin: PromptOrigin, grammar: &PromptGrammar, usernames: &[String]) -> Result<PromptItem> {
    let ctx = ValidationContext {
        usernames,
        transcript: &[],
    };
    let result = validate_prompt(text, grammar, &ctx)?;
    Ok(PromptItem {
        text: text.trim().to_string(),
        origin,
        valid: result.valid,
        violations: result.violations,
    })
}

/// Applies `edits` in order to a copy of `base`. Edited and appended items
/// are re-validated but never rejected for grammar; duplicates are then
/// removed, keeping the first occurrence.
pub fn apply_edits(
    base: &PromptSet,
    edits: &[PromptEdit],
    grammar: &PromptGrammar,
    usernames: &[String],
) -> Result<PromptSet> {
    let mut items = base.items.clone();
    for edit in edits {
        match edit {
            PromptEdit::Edit { index, text } => {
                let len = items.len();
                let slot = items
                    .get_mut(*index)
                    .ok_or(Error::IndexOutOfRange { index: *index, len })?;
                *slot = user_item(text, PromptOrigin::UserEdited, grammar, usernames)?;
            }
            PromptEdit::Remove { index } => {
                if *index >= items.len() {
                    return Err(Error::IndexOutOfRange {
                        index: *index,
                        len: items.len(),
                    });
                }
                items.remove(*index);
            }
            PromptEdit::Append { text } => {
                items.push(user_item(text, PromptOrigin::UserAdded, grammar, usernames)?);
            }
        }
    }
    let mut seen = HashSet::new();
    items.retain(|item| seen.insert(dedup_key(&item.text)));
    Ok(PromptSet {
        items,
        ..base.clone()
    })
}

impl Workshop {
    pub fn edit_prompt_set(&self, prompt_set_id: &str, edits: &[PromptEdit]) -> Result<PromptSet> {
        let key = prompt_set_key(prompt_set_id);
        self.transaction(|txn| {
            let base: PromptSet = txn
                .get_as(&key)?
                .ok_or_else(|| Error::UnknownPromptSet(prompt_set_id.to_string()))?;
            let room = crate::workshop::load_room(txn, &base.room_id)?;
            let usernames: Vec<String> = room.participants.iter().map(|u| u.to_string()).collect();
            let edited = apply_edits(&base, edits, &self.grammar, &usernames)?;
            txn.put_as(&key, &edited)?;
            Ok(edited)
        })
    }
}
