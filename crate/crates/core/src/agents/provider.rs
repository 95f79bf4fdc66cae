use std::collections::VecDeque;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::GenerationParams;
use crate::canonical::{sha256_hex, to_canonical_bytes};
use crate::error::ProviderError;

/// One prior utterance as presented to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub label: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_prompt: String,
    /// Oldest first.
    pub history: Vec<HistoryEntry>,
    pub params: GenerationParams,
}

impl CompletionRequest {
    /// Hex SHA-256 of the canonical encoding of the whole request.
    pub fn digest(&self) -> String {
        let bytes = to_canonical_bytes(self).expect("request is always serializable");
        sha256_hex(&bytes)
    }
}

/// Chat-completion backend.
pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Offline provider whose output is a pure function of the request digest.
///
/// Prompt-extraction requests (recognized by the parser instruction) get a
/// handful of well-formed design prompts picked from a fixed catalog; every
/// other request gets a short templated reply naming the persona.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockChatProvider;

const PARSER_MARKER: &str = "Given ONE chat segment as a JSON object";

/// Catalog the mock draws design prompts from. Every entry satisfies the
/// prompt grammar.
pub const MOCK_PROMPT_CATALOG: [&str; 16] = [
    "Add shaded seating clusters along active pedestrian corridors",
    "Plant street trees along the corridor to buffer pedestrians from traffic",
    "Install covered trash containers at regular intervals along the curb",
    "Widen sidewalks near the corner to create room for planters",
    "Provide wooden benches with planters between the sidewalk and street",
    "Create a protected bike lane separated by low planter boxes",
    "Reduce curbside parking to make space for pocket green areas",
    "Convert the unused curb space into a small landscaped plaza",
    "Increase tree canopy coverage along the sunny side of the street",
    "Calm vehicle traffic with raised crosswalks at the main intersection",
    "Shade waiting areas with lightweight canopies near the bus stop",
    "Expand planting beds along the building frontage with native shrubs",
    "Separate pedestrians from cyclists using textured paving and planters",
    "Prioritize accessible curb ramps at every crossing along the block",
    "Protect existing mature trees with raised planters and seating edges",
    "Slow turning vehicles with tighter corner radii and sturdy bollards",
];

impl MockChatProvider {
    pub fn new() -> Self {
        Self
    }

    fn design_prompts(digest: &[u8]) -> String {
        let mut picked: Vec<usize> = Vec::with_capacity(5);
        let mut i = 0;
        while picked.len() < 5 {
            let idx = digest[i % digest.len()] as usize % MOCK_PROMPT_CATALOG.len();
            let idx = (idx + i / digest.len()) % MOCK_PROMPT_CATALOG.len();
            if !picked.contains(&idx) {
                picked.push(idx);
            }
            i += 1;
        }
        picked
            .iter()
            .map(|&i| MOCK_PROMPT_CATALOG[i])
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn persona_reply(request: &CompletionRequest, digest_hex: &str) -> String {
        let first_line = request.system_prompt.lines().next().unwrap_or_default();
        let voice = if first_line.contains("facilitator") {
            "Facilitator synthesis"
        } else if first_line.contains("urban designer") {
            "Designer perspective"
        } else if first_line.contains("urban planner") {
            "Planner perspective"
        } else {
            "Response"
        };
        let latest = request
            .history
            .iter()
            .rev()
            .find(|e| !e.label.starts_with("AI ") && e.label != "System")
            .map(|e| {
                let mut s: String = e.content.chars().take(80).collect();
                if e.content.chars().count() > 80 {
                    s.push('…');
                }
                s
            });
        let voices = request
            .history
            .iter()
            .filter(|e| !e.label.starts_with("AI ") && e.label != "System")
            .count();
        let mut out = format!(
            "{voice} [{}] after {} contribution(s).",
            &digest_hex[..12],
            voices
        );
        if let Some(latest) = latest {
            out.push_str(&format!(" Building on \"{latest}\", "));
            out.push_str("what if we picture it at street level with more greenery and seating?");
        } else {
            out.push_str(" Share what you notice about the street scene to get us started.");
        }
        out
    }
}

impl ChatProvider for MockChatProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let digest_hex = request.digest();
        if request.system_prompt.starts_with(PARSER_MARKER) {
            let digest = hex::decode(&digest_hex).expect("hex digest");
            Ok(Self::design_prompts(&digest))
        } else {
            Ok(Self::persona_reply(request, &digest_hex))
        }
    }
}

/// Wraps a provider and keeps every request it forwards.
#[derive(Debug, Default)]
pub struct RecordingChatProvider<P> {
    inner: P,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl<P> RecordingChatProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().clone()
    }
}

impl<P: ChatProvider> ChatProvider for RecordingChatProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.requests.lock().push(request.clone());
        self.inner.complete(request)
    }
}

/// Replays a fixed script of responses; the last one repeats once the
/// script runs out.
#[derive(Debug)]
pub struct ScriptedChatProvider {
    script: Mutex<VecDeque<Result<String, ProviderError>>>,
    last: Mutex<Option<Result<String, ProviderError>>>,
}

impl ScriptedChatProvider {
    pub fn new(script: impl IntoIterator<Item = Result<String, ProviderError>>) -> Self {
        Self {
            script: Mutex::new(script.into_iter().collect()),
            last: Mutex::new(None),
        }
    }

    pub fn always(text: impl Into<String>) -> Self {
        Self::new([Ok(text.into())])
    }
}

impl ChatProvider for ScriptedChatProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, _request: &CompletionRequest) -> Result<String, ProviderError> {
        let next = self.script.lock().pop_front();
        let mut last = self.last.lock();
        match next {
            Some(r) => {
                *last = Some(r.clone());
                r
            }
            None => last
                .clone()
                .unwrap_or_else(|| Err(ProviderError::unavailable("script exhausted"))),
        }
    }
}

/// Provider that always fails, e.g. a live adapter with no reachable backend.
#[derive(Debug, Clone)]
pub struct FailingChatProvider {
    error: ProviderError,
}

impl FailingChatProvider {
    pub fn new(error: ProviderError) -> Self {
        Self { error }
    }
}

impl Default for FailingChatProvider {
    fn default() -> Self {
        Self::new(ProviderError::unavailable("chat provider unavailable"))
    }
}

impl ChatProvider for FailingChatProvider {
    fn name(&self) -> &str {
        "failing"
    }

    fn complete(&self, _request: &CompletionRequest) -> Result<String, ProviderError> {
        Err(self.error.clone())
    }
}
