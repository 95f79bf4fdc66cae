//! Session bundle: a deterministic ZIP archive of the transcript, prompt
//! sets, and images of one room.
//!
//! ```text
//! manifest.json          room metadata and artifact/snapshot records
//! transcript.jsonl       one message per line, seq order
//! prompts.json           all prompt sets, creation order
//! images/<id>.png        one entry per artifact, manifest order
//! ```
//!
//! Every JSON document is canonical and every entry is stored uncompressed
//! with a fixed timestamp and mode, so equal bundles produce equal bytes.

use std::io::{Cursor, Read, Write};

use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::agents::AgentActivation;
use crate::canonical::{content_hash, to_canonical_bytes};
use crate::error::{Error, Result};
use crate::prompts::PromptSet;
use crate::scene::{ImageArtifact, SceneSnapshot};
use crate::session::{ChatMessage, RoomStatus, Username};
use crate::workshop::Workshop;

pub const MANIFEST_ENTRY: &str = "manifest.json";
pub const TRANSCRIPT_ENTRY: &str = "transcript.jsonl";
pub const PROMPTS_ENTRY: &str = "prompts.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub format_version: u32,
    pub room_id: String,
    pub participants: Vec<Username>,
    pub agent_roster: Vec<AgentActivation>,
    pub status: RoomStatus,
    /// Rounds started, including the current one.
    pub round_count: u32,
    pub created_at_ms: i64,
    pub ended_at_ms: Option<i64>,
    pub message_count: u64,
    pub artifacts: Vec<ImageArtifact>,
    pub snapshots: Vec<SceneSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportImage {
    pub artifact_id: String,
    pub png: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportBundle {
    pub manifest: ExportManifest,
    pub transcript: Vec<ChatMessage>,
    pub prompt_sets: Vec<PromptSet>,
    pub images: Vec<ExportImage>,
}

fn image_entry(artifact_id: &str) -> String {
    format!("images/{artifact_id}.png")
}

fn malformed(err: impl std::fmt::Display) -> Error {
    Error::MalformedArchive(err.to_string())
}

impl ExportBundle {
    /// Serializes to the canonical archive bytes.
    pub fn to_archive(&self) -> Result<Vec<u8>> {
        let options = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Stored)
            .last_modified_time(DateTime::default())
            .unix_permissions(0o644);
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let entry = |zip: &mut ZipWriter<Cursor<Vec<u8>>>, name: &str, bytes: &[u8]| -> Result<()> {
            zip.start_file(name, options).map_err(Error::storage)?;
            zip.write_all(bytes)?;
            Ok(())
        };

        entry(&mut zip, MANIFEST_ENTRY, &to_canonical_bytes(&self.manifest)?)?;
        let mut transcript = Vec::new();
        for message in &self.transcript {
            transcript.extend(to_canonical_bytes(message)?);
            transcript.push(b'\n');
        }
        entry(&mut zip, TRANSCRIPT_ENTRY, &transcript)?;
        entry(&mut zip, PROMPTS_ENTRY, &to_canonical_bytes(&self.prompt_sets)?)?;
        for image in &self.images {
            entry(&mut zip, &image_entry(&image.artifact_id), &image.png)?;
        }
        Ok(zip.finish().map_err(Error::storage)?.into_inner())
    }

    /// Parses an archive produced by [`ExportBundle::to_archive`], checking
    /// that every image the manifest lists is present and matches its hash.
    pub fn from_archive(bytes: &[u8]) -> Result<Self> {
        let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(malformed)?;
        let mut read = |name: &str| -> Result<Vec<u8>> {
            let mut file = zip.by_name(name).map_err(|e| malformed(format!("{name}: {e}")))?;
            let mut out = Vec::new();
            file.read_to_end(&mut out).map_err(malformed)?;
            Ok(out)
        };

        let manifest: ExportManifest = serde_json::from_slice(&read(MANIFEST_ENTRY)?).map_err(malformed)?;
        let transcript = read(TRANSCRIPT_ENTRY)?
            .split(|b| *b == b'\n')
            .filter(|line| !line.is_empty())
            .map(|line| serde_json::from_slice(line).map_err(malformed))
            .collect::<Result<Vec<ChatMessage>>>()?;
        let prompt_sets: Vec<PromptSet> = serde_json::from_slice(&read(PROMPTS_ENTRY)?).map_err(malformed)?;
        let mut images = Vec::new();
        for artifact in &manifest.artifacts {
            let png = read(&image_entry(&artifact.artifact_id))?;
            if content_hash(&png) != artifact.content_hash {
                return Err(malformed(format!("hash mismatch for {}", artifact.artifact_id)));
            }
            images.push(ExportImage {
                artifact_id: artifact.artifact_id.clone(),
                png,
            });
        }
        let expected = 3 + manifest.artifacts.len();
        if zip.len() != expected {
            return Err(malformed(format!("expected {expected} entries, found {}", zip.len())));
        }
        Ok(Self {
            manifest,
            transcript,
            prompt_sets,
            images,
        })
    }

    /// Artifact ids mentioned by transcript messages that have no image in
    /// the bundle. Empty for every bundle the service produces.
    pub fn dangling_artifact_refs(&self) -> Vec<String> {
        self.transcript
            .iter()
            .filter_map(|m| m.artifact_ref.as_ref())
            .filter(|id| !self.images.iter().any(|i| &i.artifact_id == *id))
            .cloned()
            .collect()
    }
}

impl Workshop {
    /// Assembles the bundle from one read of the room document: the log up
    /// to its `next_seq` and the artifacts and prompt sets it references.
    pub fn export_session(&self, room_id: &str) -> Result<ExportBundle> {
        let room = self.room(room_id)?;
        let transcript = self.messages_in(room_id, 1, room.next_seq)?;
        let artifacts = room
            .artifact_refs
            .iter()
            .map(|id| self.artifact(id))
            .collect::<Result<Vec<_>>>()?;
        let snapshots = room
            .scene_refs
            .iter()
            .map(|id| self.snapshot(id))
            .collect::<Result<Vec<_>>>()?;
        let prompt_sets = room
            .prompt_set_refs
            .iter()
            .map(|id| self.prompt_set(id))
            .collect::<Result<Vec<_>>>()?;
        let images = artifacts
            .iter()
            .map(|a| {
                Ok(ExportImage {
                    artifact_id: a.artifact_id.clone(),
                    png: self.artifact_bytes(&a.artifact_id)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExportBundle {
            manifest: ExportManifest {
                format_version: FORMAT_VERSION,
                room_id: room.room_id.clone(),
                participants: room.participants.clone(),
                agent_roster: room.agent_roster.clone(),
                status: room.status,
                round_count: room.current_round,
                created_at_ms: room.created_at_ms,
                ended_at_ms: room.ended_at_ms,
                message_count: room.next_seq - 1,
                artifacts,
                snapshots,
            },
            transcript,
            prompt_sets,
            images,
        })
    }
}
