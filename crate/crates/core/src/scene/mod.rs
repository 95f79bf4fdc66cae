//! Street-scene snapshots, prompt-conditioned revisions, and the
//! append-only image artifact store.

mod provider;
mod render;

use serde::{Deserialize, Serialize};

use crate::canonical::{content_hash, derived_id};
use crate::error::{Error, Result};
use crate::prompts::PromptSet;
use crate::session::{Notice, Username};
use crate::workshop::{append_message, load_room, save_room, Draft, Workshop};

pub use provider::{
    ImageProvider, MockImageProvider, MockSceneProvider, RevisionRequest, SceneProvider,
    UnavailableProvider,
};

/// Fixed preamble sent ahead of the prompt list in every revision request.
pub const REVISION_INSTRUCTION: &str = include_str!("../../prompts/v1/revision_instruction.txt");

/// Camera pose and location of a street-level view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewParams {
    pub panorama_id: String,
    /// Degrees in [0, 360).
    pub heading: f64,
    /// Degrees in [-90, 90].
    pub pitch: f64,
    /// Degrees in (0, 120].
    pub fov: f64,
    pub lat: f64,
    pub lon: f64,
}

impl ViewParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidViewParams(what.to_string()));
        if self.panorama_id.trim().is_empty() {
            return bad("panorama_id is empty");
        }
        let fields = [self.heading, self.pitch, self.fov, self.lat, self.lon];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if !(0.0..360.0).contains(&self.heading) {
            return bad("heading must be in [0, 360)");
        }
        if !(-90.0..=90.0).contains(&self.pitch) {
            return bad("pitch must be in [-90, 90]");
        }
        if !(self.fov > 0.0 && self.fov <= 120.0) {
            return bad("fov must be in (0, 120]");
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return bad("lat must be in [-90, 90]");
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return bad("lon must be in [-180, 180]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub snapshot_id: String,
    pub room_id: String,
    pub view: ViewParams,
    /// Artifact holding the fetched image.
    pub image_ref: String,
    pub saved_round: u32,
    pub saved_by: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    SourceScene,
    RevisedDesign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageArtifact {
    pub artifact_id: String,
    pub room_id: String,
    pub kind: ArtifactKind,
    pub source_snapshot: Option<String>,
    /// Artifact this one was revised from.
    pub parent_artifact: Option<String>,
    pub prompt_set: Option<String>,
    pub content_hash: String,
    pub created_round: u32,
    /// 0 for a scene image, parent's plus one for each revision.
    pub generation_index: u32,
    /// Seq of the System message announcing the artifact.
    pub seq: u64,
    /// Path of the PNG relative to the store root.
    pub bytes_ref: String,
    pub created_by: String,
}

pub(crate) fn snapshot_key(id: &str) -> String {
    format!("snapshots/{id}")
}

pub(crate) fn artifact_key(id: &str) -> String {
    format!("artifacts/{id}")
}

impl Workshop {
    /// Fetches the view from the scene provider and stores it as a snapshot
    /// plus a source image artifact, announced in the chat.
    pub fn save_snapshot(&self, room_id: &str, by: &str, view: &ViewParams) -> Result<SceneSnapshot> {
        let user = Username::parse(by)?;
        view.validate()?;
        let room = self.room(room_id)?;
        room.require_participant(&user)?;
        room.require_active()?;

        let bytes = self.scenes.fetch_scene_image(view).map_err(Error::SceneProvider)?;
        let hash = content_hash(&bytes);
        let now = self.now_ms();
        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_active()?;
            let snapshot_id = derived_id("scene", &[room_id, &room.scene_refs.len().to_string()]);
            let artifact_id = derived_id("img", &[room_id, &room.artifact_refs.len().to_string()]);
            let round = room.current_round;
            let msg = append_message(
                txn,
                &mut room,
                Draft {
                    artifact_ref: Some(artifact_id.clone()),
                    ..Draft::system(
                        format!(
                            "{by} saved a street view snapshot (heading {:.0}°, pitch {:.0}°).",
                            view.heading, view.pitch
                        ),
                        round,
                        Notice::SceneSaved,
                    )
                },
                now,
            )?;
            let artifact = ImageArtifact {
                artifact_id: artifact_id.clone(),
                room_id: room_id.to_string(),
                kind: ArtifactKind::SourceScene,
                source_snapshot: Some(snapshot_id.clone()),
                parent_artifact: None,
                prompt_set: None,
                content_hash: hash.clone(),
                created_round: round,
                generation_index: 0,
                seq: msg.seq,
                bytes_ref: format!("artifacts/{artifact_id}.png"),
                created_by: user.to_string(),
            };
            let snapshot = SceneSnapshot {
                snapshot_id: snapshot_id.clone(),
                room_id: room_id.to_string(),
                view: view.clone(),
                image_ref: artifact_id.clone(),
                saved_round: round,
                saved_by: user.to_string(),
            };
            room.scene_refs.push(snapshot_id.clone());
            room.artifact_refs.push(artifact_id.clone());
            txn.put_blob(&artifact_id, bytes.clone());
            txn.put_as(&artifact_key(&artifact_id), &artifact)?;
            txn.put_as(&snapshot_key(&snapshot_id), &snapshot)?;
            save_room(txn, &room)?;
            Ok(snapshot)
        })
    }

    /// Revises `source` (default: the room's most recent artifact) with every
    /// item of the prompt set, user items flagged invalid included.
    pub fn revise_image(
        &self,
        room_id: &str,
        by: &str,
        prompt_set_id: &str,
        source: Option<&str>,
    ) -> Result<ImageArtifact> {
        let user = Username::parse(by)?;
        let room = self.room(room_id)?;
        room.require_participant(&user)?;
        room.require_active()?;
        let set: PromptSet = self.prompt_set(prompt_set_id)?;
        if set.room_id != room_id {
            return Err(Error::UnknownPromptSet(prompt_set_id.to_string()));
        }
        if set.items.is_empty() {
            return Err(Error::EmptyPromptSet);
        }
        let parent_id = match source {
            Some(id) => id.to_string(),
            None => room.artifact_refs.last().cloned().ok_or(Error::NoSourceImage)?,
        };
        let parent = self.artifact(&parent_id)?;
        if parent.room_id != room_id {
            return Err(Error::UnknownArtifact(parent_id));
        }
        let request = RevisionRequest {
            source_png: self.artifact_bytes(&parent_id)?,
            instruction: REVISION_INSTRUCTION.to_string(),
            prompts: set.texts(),
        };
        let bytes = self.images.revise(&request).map_err(Error::ImageProvider)?;
        let hash = content_hash(&bytes);
        let generation = parent.generation_index + 1;
        let now = self.now_ms();

        self.transaction(|txn| {
            let mut room = load_room(txn, room_id)?;
            room.require_active()?;
            let artifact_id = derived_id("img", &[room_id, &room.artifact_refs.len().to_string()]);
            let round = room.current_round;
            let msg = append_message(
                txn,
                &mut room,
                Draft {
                    artifact_ref: Some(artifact_id.clone()),
                    ..Draft::system(
                        format!(
                            "Generated design visualization (generation {generation}) from {} prompts.",
                            request.prompts.len()
                        ),
                        round,
                        Notice::DesignGenerated,
                    )
                },
                now,
            )?;
            let artifact = ImageArtifact {
                artifact_id: artifact_id.clone(),
                room_id: room_id.to_string(),
                kind: ArtifactKind::RevisedDesign,
                source_snapshot: parent.source_snapshot.clone(),
                parent_artifact: Some(parent.artifact_id.clone()),
                prompt_set: Some(set.prompt_set_id.clone()),
                content_hash: hash.clone(),
                created_round: round,
                generation_index: generation,
                seq: msg.seq,
                bytes_ref: format!("artifacts/{artifact_id}.png"),
                created_by: user.to_string(),
            };
            room.artifact_refs.push(artifact_id.clone());
            txn.put_blob(&artifact_id, bytes.clone());
            txn.put_as(&artifact_key(&artifact_id), &artifact)?;
            save_room(txn, &room)?;
            Ok(artifact)
        })
    }

    /// All artifacts of the room in creation order.
    pub fn list_artifacts(&self, room_id: &str) -> Result<Vec<ImageArtifact>> {
        let room = self.room(room_id)?;
        room.artifact_refs.iter().map(|id| self.artifact(id)).collect()
    }

    pub fn artifact(&self, artifact_id: &str) -> Result<ImageArtifact> {
        let record = self
            .store
            .get(&artifact_key(artifact_id))?
            .ok_or_else(|| Error::UnknownArtifact(artifact_id.to_string()))?;
        Ok(serde_json::from_value(record.value)?)
    }

    pub fn artifact_bytes(&self, artifact_id: &str) -> Result<Vec<u8>> {
        self.store
            .get_blob(artifact_id)?
            .ok_or_else(|| Error::UnknownArtifact(artifact_id.to_string()))
    }

    pub fn snapshot(&self, snapshot_id: &str) -> Result<SceneSnapshot> {
        let record = self
            .store
            .get(&snapshot_key(snapshot_id))?
            .ok_or_else(|| Error::UnknownSnapshot(snapshot_id.to_string()))?;
        Ok(serde_json::from_value(record.value)?)
    }
}
