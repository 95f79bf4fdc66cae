//! Two residents and a planner agent take a street from snapshot to a
//! second-generation design and export the session.

use std::collections::BTreeMap;
use std::sync::Arc;

use codesign_core::canonical::content_hash;
use codesign_core::prompts::PromptOrigin;
use codesign_core::{
    AgentRole, ArtifactKind, ExportBundle, FileStore, MessageRole, PromptEdit, RegistrationPhase, RoomStatus,
    SteppingClock, Store, Workshop,
};

use crate::support::view;

pub const ROOM: &str = "main-street";
const RESIDENT_A: &str = "resident_a";
const RESIDENT_B: &str = "resident_b";
const SUGGESTION_A: &str = "replace the open-sidewalk piling with on-street trash containers";
const SUGGESTION_B: &str = "add sustainable wooden benches and planters along the sidewalk";
const APPENDED: &str = "Add sustainable wooden benches and planters along the sidewalk";

pub struct Session {
    pub ws: Workshop,
    pub bundle: ExportBundle,
    pub archive: Vec<u8>,
}

fn e(step: &'static str) -> impl Fn(codesign_core::Error) -> String {
    move |err| format!("{step}: {err}")
}

/// Runs the scripted session on `store` with mock providers and a stepping
/// clock.
pub fn play(store: Arc<dyn Store>) -> Result<Session, String> {
    let ws = Workshop::builder()
        .store(store)
        .clock(Arc::new(SteppingClock::default()))
        .build();

    ws.create_or_join_room(RESIDENT_A, ROOM).map_err(e("create"))?;
    ws.create_or_join_room(RESIDENT_B, ROOM).map_err(e("join"))?;
    ws.register_expert(ROOM, AgentRole::Planner, RegistrationPhase::AtCreation)
        .map_err(e("add planner"))?;
    ws.set_ready(ROOM, RESIDENT_A, true).map_err(e("ready a"))?;
    ws.set_ready(ROOM, RESIDENT_B, true).map_err(e("ready b"))?;

    ws.save_snapshot(ROOM, RESIDENT_A, &view("pano-main-street")).map_err(e("snapshot"))?;
    let first = ws.post_message(ROOM, RESIDENT_A, SUGGESTION_A).map_err(e("suggest a"))?;
    ensure!(!first.round_completed, "round closed after one of two residents");
    let second = ws.post_message(ROOM, RESIDENT_B, SUGGESTION_B).map_err(e("suggest b"))?;
    ensure!(
        second.round_completed && second.facilitator_reply.is_some() && second.new_round == Some(2),
        "second suggestion did not close round 1: {second:?}"
    );
    ws.query_expert(ROOM, AgentRole::Planner, RESIDENT_B).map_err(e("planner"))?;

    let set = ws.generate_prompt_set(ROOM, RESIDENT_A).map_err(e("extract"))?;
    ensure!(
        (4..=6).contains(&set.items.len()) && !set.degraded && set.valid_count() == set.items.len(),
        "extracted {} prompts ({} valid, degraded {})",
        set.items.len(),
        set.valid_count(),
        set.degraded
    );
    let edited = ws
        .edit_prompt_set(&set.prompt_set_id, &[PromptEdit::Append { text: APPENDED.into() }])
        .map_err(e("edit"))?;

    let first_gen = ws
        .revise_image(ROOM, RESIDENT_B, &edited.prompt_set_id, None)
        .map_err(e("generate"))?;
    let second_gen = ws
        .revise_image(ROOM, RESIDENT_A, &edited.prompt_set_id, None)
        .map_err(e("revise"))?;
    ensure!(
        second_gen.parent_artifact.as_deref() == Some(first_gen.artifact_id.as_str()),
        "revision did not build on the first design"
    );
    ws.end_session(ROOM, RESIDENT_B).map_err(e("end"))?;

    let bundle = ws.export_session(ROOM).map_err(e("export"))?;
    let archive = bundle.to_archive().map_err(e("archive"))?;
    Ok(Session { ws, bundle, archive })
}

pub fn run() -> Result<String, String> {
    let one = play(Arc::new(codesign_core::MemoryStore::new()))?;
    let two = play(Arc::new(codesign_core::MemoryStore::new()))?;
    ensure!(one.archive == two.archive, "repeated runs produced different archives");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let on_disk = play(Arc::new(FileStore::open(dir.path()).map_err(|e| e.to_string())?))?;
    ensure!(on_disk.archive == one.archive, "file-backed run produced a different archive");

    let Session { ws, bundle, archive } = one;
    let reread = ExportBundle::from_archive(&archive).map_err(|e| format!("archive does not reopen: {e}"))?;
    ensure!(reread == bundle, "archive round trip changed the bundle");

    // transcript: planner notice, snapshot, two suggestions, synthesis,
    // planner reply, two design notices
    let by_role = bundle.transcript.iter().fold(BTreeMap::new(), |mut acc, m| {
        *acc.entry(format!("{:?}", m.role)).or_insert(0usize) += 1;
        acc
    });
    let want: BTreeMap<String, usize> = [("User", 2), ("Facilitator", 1), ("Planner", 1), ("System", 4)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    ensure!(bundle.transcript.len() == 8, "transcript has {} messages", bundle.transcript.len());
    ensure!(by_role == want, "transcript roles {by_role:?}");
    ensure!(
        bundle.transcript == ws.message_log(ROOM).map_err(|e| e.to_string())?,
        "transcript differs from the stored log"
    );
    let users: Vec<&str> = bundle
        .transcript
        .iter()
        .filter(|m| m.role == MessageRole::User)
        .map(|m| m.content.as_str())
        .collect();
    ensure!(users == [SUGGESTION_A, SUGGESTION_B], "user messages {users:?}");

    let m = &bundle.manifest;
    ensure!(m.message_count == 8 && m.status == RoomStatus::Ended, "manifest {m:?}");
    ensure!(m.participants.len() == 2 && m.round_count == 2, "participants/rounds in manifest");
    ensure!(m.snapshots.len() == 1, "{} snapshots", m.snapshots.len());
    ensure!(
        m.agent_roster.iter().any(|a| a.agent_role == AgentRole::Planner && a.activation_round == 1),
        "planner missing from roster"
    );

    ensure!(bundle.prompt_sets.len() == 1, "{} prompt sets", bundle.prompt_sets.len());
    let set = &bundle.prompt_sets[0];
    let last = set.items.last().ok_or("empty prompt set")?;
    ensure!(
        last.text == APPENDED && last.origin == PromptOrigin::UserAdded && last.valid,
        "appended prompt {last:?}"
    );

    let lineage: Vec<(ArtifactKind, u32)> = m.artifacts.iter().map(|a| (a.kind, a.generation_index)).collect();
    ensure!(
        lineage
            == [
                (ArtifactKind::SourceScene, 0),
                (ArtifactKind::RevisedDesign, 1),
                (ArtifactKind::RevisedDesign, 2)
            ],
        "lineage {lineage:?}"
    );
    for pair in m.artifacts.windows(2) {
        ensure!(
            pair[1].parent_artifact.as_deref() == Some(pair[0].artifact_id.as_str()),
            "{} does not descend from {}",
            pair[1].artifact_id,
            pair[0].artifact_id
        );
    }
    for a in &m.artifacts[1..] {
        ensure!(a.prompt_set.as_deref() == Some(set.prompt_set_id.as_str()), "artifact {} prompt set", a.artifact_id);
        ensure!(a.source_snapshot == m.artifacts[0].source_snapshot, "artifact {} lost its snapshot", a.artifact_id);
    }
    ensure!(bundle.images.len() == 3, "{} images", bundle.images.len());
    for (img, art) in bundle.images.iter().zip(&m.artifacts) {
        ensure!(
            img.artifact_id == art.artifact_id && content_hash(&img.png) == art.content_hash,
            "image {} does not match its artifact",
            img.artifact_id
        );
    }
    ensure!(bundle.dangling_artifact_refs().is_empty(), "dangling artifact references");

    Ok(format!(
        "8 messages, {} prompts, generations 0/1/2, {}-byte archive identical across 3 runs",
        set.items.len(),
        archive.len()
    ))
}
