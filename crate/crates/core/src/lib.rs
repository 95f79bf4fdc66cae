//! Round-based co-design sessions between residents and AI agents.
//!
//! [`Workshop`] is the entry point: rooms, the round protocol, agent
//! invocation, prompt extraction, scene revision, and export are all methods
//! on it. State lives in a [`store::Store`]; external models sit behind the
//! provider traits, each with a deterministic offline implementation.

pub mod agents;
pub mod canonical;
pub mod clock;
pub mod error;
pub mod export;
pub mod prompts;
pub mod scene;
pub mod session;
pub mod store;
mod workshop;

pub use agents::{
    AgentActivation, AgentConfig, AgentRole, ChatProvider, GenerationParams, MockChatProvider,
    Personas, RegistrationPhase,
};
pub use clock::{Clock, SteppingClock, SystemClock};
pub use error::{Error, ProviderError, ProviderErrorKind, Result};
pub use export::{ExportBundle, ExportManifest};
pub use prompts::{PromptEdit, PromptGrammar, PromptSet, ValidationResult, Violation};
pub use scene::{ArtifactKind, ImageArtifact, ImageProvider, SceneProvider, SceneSnapshot, ViewParams};
pub use session::{ChatMessage, MessageRole, PostOutcome, RoomDelta, RoomDocument, RoomStatus};
pub use store::{FileStore, MemoryStore, RetryPolicy, Store};
pub use workshop::{Limits, Workshop, WorkshopBuilder};
