use std::sync::Arc;

use crate::agents::{ChatProvider, HistoryLimits, MockChatProvider, Personas};
use crate::clock::{Clock, SystemClock};
use crate::error::{Error, Result};
use crate::prompts::PromptGrammar;
use crate::scene::{ImageProvider, MockImageProvider, MockSceneProvider, SceneProvider};
use crate::session::{message_key, ChatMessage, MessageRole, Notice, RoomDocument};
use crate::store::{run_transaction, MemoryStore, RetryPolicy, Store, Txn};

/// Tunable bounds applied across all operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_participants: usize,
    pub history: HistoryLimits,
    pub retry: RetryPolicy,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_participants: 16,
            history: HistoryLimits::default(),
            retry: RetryPolicy::default(),
        }
    }
}

/// The collaborative design service: every room operation is a method here.
///
/// Cheap to clone; all state lives in the shared store.
#[derive(Clone)]
pub struct Workshop {
    pub(crate) store: Arc<dyn Store>,
    pub(crate) chat: Arc<dyn ChatProvider>,
    pub(crate) scenes: Arc<dyn SceneProvider>,
    pub(crate) images: Arc<dyn ImageProvider>,
    pub(crate) clock: Arc<dyn Clock>,
    pub(crate) personas: Arc<Personas>,
    pub(crate) grammar: Arc<PromptGrammar>,
    pub(crate) limits: Limits,
}

impl std::fmt::Debug for Workshop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workshop")
            .field("chat", &self.chat.name())
            .field("limits", &self.limits)
            .finish_non_exhaustive()
    }
}

pub struct WorkshopBuilder {
    store: Option<Arc<dyn Store>>,
    chat: Option<Arc<dyn ChatProvider>>,
    scenes: Option<Arc<dyn SceneProvider>>,
    images: Option<Arc<dyn ImageProvider>>,
    clock: Option<Arc<dyn Clock>>,
    personas: Personas,
    grammar: PromptGrammar,
    limits: Limits,
}

impl WorkshopBuilder {
    pub fn store(mut self, store: Arc<dyn Store>) -> Self {
        self.store = Some(store);
        self
    }

    pub fn chat(mut self, chat: Arc<dyn ChatProvider>) -> Self {
        self.chat = Some(chat);
        self
    }

    pub fn scenes(mut self, scenes: Arc<dyn SceneProvider>) -> Self {
        self.scenes = Some(scenes);
        self
    }

    pub fn images(mut self, images: Arc<dyn ImageProvider>) -> Self {
        self.images = Some(images);
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn personas(mut self, personas: Personas) -> Self {
        self.personas = personas;
        self
    }

    pub fn grammar(mut self, grammar: PromptGrammar) -> Self {
        self.grammar = grammar;
        self
    }

    pub fn limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn build(self) -> Workshop {
        Workshop {
            store: self.store.unwrap_or_else(|| Arc::new(MemoryStore::new())),
            chat: self.chat.unwrap_or_else(|| Arc::new(MockChatProvider)),
            scenes: self
                .scenes
                .unwrap_or_else(|| Arc::new(MockSceneProvider::default())),
            images: self
                .images
                .unwrap_or_else(|| Arc::new(MockImageProvider::default())),
            clock: self.clock.unwrap_or_else(|| Arc::new(SystemClock)),
            personas: Arc::new(self.personas),
            grammar: Arc::new(self.grammar),
            limits: self.limits,
        }
    }
}

impl Workshop {
    pub fn builder() -> WorkshopBuilder {
        WorkshopBuilder {
            store: None,
            chat: None,
            scenes: None,
            images: None,
            clock: None,
            personas: Personas::builtin(),
            grammar: PromptGrammar::default(),
            limits: Limits::default(),
        }
    }

    /// In-memory store with mock providers and the system clock.
    pub fn in_memory() -> Self {
        Self::builder().build()
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.store
    }

    pub fn personas(&self) -> &Personas {
        &self.personas
    }

    pub fn grammar(&self) -> &PromptGrammar {
        &self.grammar
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub(crate) fn transaction<T>(&self, body: impl FnMut(&mut Txn<'_>) -> Result<T>) -> Result<T> {
        run_transaction(self.store.as_ref(), &self.limits.retry, body)
    }

    pub(crate) fn now_ms(&self) -> i64 {
        self.clock.now_ms()
    }

    /// Reads the committed room document outside any transaction.
    pub fn room(&self, room_id: &str) -> Result<RoomDocument> {
        let record = self
            .store
            .get(&room_key(room_id))?
            .ok_or_else(|| Error::UnknownRoom(room_id.to_string()))?;
        Ok(serde_json::from_value(record.value)?)
    }

    /// Messages with `from <= seq < to`, in seq order.
    pub(crate) fn messages_in(&self, room_id: &str, from: u64, to: u64) -> Result<Vec<ChatMessage>> {
        (from.max(1)..to)
            .map(|seq| {
                let record = self.store.get(&message_key(room_id, seq))?.ok_or_else(|| {
                    Error::Storage(format!("message {seq} of room {room_id} is missing"))
                })?;
                Ok(serde_json::from_value(record.value)?)
            })
            .collect()
    }

    /// Full committed log as of the room document's current `next_seq`.
    pub fn message_log(&self, room_id: &str) -> Result<Vec<ChatMessage>> {
        let room = self.room(room_id)?;
        self.messages_in(room_id, 1, room.next_seq)
    }
}

pub(crate) fn room_key(room_id: &str) -> String {
    format!("rooms/{room_id}")
}

pub(crate) fn load_room(txn: &mut Txn<'_>, room_id: &str) -> Result<RoomDocument> {
    txn.get_as(&room_key(room_id))?
        .ok_or_else(|| Error::UnknownRoom(room_id.to_string()))
}

pub(crate) fn save_room(txn: &mut Txn<'_>, room: &RoomDocument) -> Result<()> {
    txn.put_as(&room_key(&room.room_id), room)
}

/// Fields of a message before the room assigns its seq.
pub(crate) struct Draft<'a> {
    pub author: &'a str,
    pub role: MessageRole,
    pub content: String,
    pub round_index: u32,
    pub notice: Option<Notice>,
    pub artifact_ref: Option<String>,
}

impl<'a> Draft<'a> {
    pub fn system(content: String, round_index: u32, notice: Notice) -> Self {
        Self {
            author: crate::session::SYSTEM_AUTHOR,
            role: MessageRole::System,
            content,
            round_index,
            notice: Some(notice),
            artifact_ref: None,
        }
    }
}

/// Assigns the next seq, stores the message, and bumps the room counter.
/// The caller saves the room document in the same transaction.
pub(crate) fn append_message(
    txn: &mut Txn<'_>,
    room: &mut RoomDocument,
    draft: Draft<'_>,
    now_ms: i64,
) -> Result<ChatMessage> {
    debug_assert!(draft.round_index <= room.current_round);
    let seq = room.allocate_seq();
    let message = ChatMessage {
        room_id: room.room_id.clone(),
        seq,
        author: draft.author.to_string(),
        role: draft.role,
        content: draft.content,
        timestamp_ms: now_ms,
        round_index: draft.round_index,
        notice: draft.notice,
        artifact_ref: draft.artifact_ref,
    };
    txn.put_as(&message_key(&room.room_id, seq), &message)?;
    Ok(message)
}
