//! Incremental state reads against the full log.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use codesign_core::{AgentRole, ChatMessage, RegistrationPhase, Workshop};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::scenario;
use crate::support::{names, open_room, seed_for, view};

const POLLER_TRIALS: usize = 60;
const WRITES_PER_TRIAL: usize = 40;

/// Every `since` splits the log into what the client has and what it gets.
fn check_partitions(ws: &Workshop, room: &str) -> Result<usize, String> {
    let log = ws.message_log(room).map_err(|e| e.to_string())?;
    let doc = ws.room(room).map_err(|e| e.to_string())?;
    for since in 0..=log.len() as u64 + 2 {
        let delta = ws.get_room_state(room, since).map_err(|e| e.to_string())?;
        let cut = (since as usize).min(log.len());
        ensure!(delta.messages == log[cut..], "since {since}: delta is not the log suffix");
        ensure!(delta.room == doc, "since {since}: room document differs");
        let referenced: Vec<&str> = delta.messages.iter().filter_map(|m| m.artifact_ref.as_deref()).collect();
        let returned: Vec<&str> = delta.artifacts.iter().map(|a| a.artifact_id.as_str()).collect();
        ensure!(referenced == returned, "since {since}: artifacts {returned:?} vs referenced {referenced:?}");
    }
    Ok(log.len())
}

fn writer(ws: Workshop, users: Vec<String>, seed: u64, done: Arc<AtomicBool>) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    for i in 0..WRITES_PER_TRIAL {
        let u = &users[rng.random_range(0..users.len())];
        let r = match rng.random_range(0..10) {
            0 => ws.save_snapshot("poll", u, &view("pano-poll")).map(drop),
            1 => ws.query_expert("poll", AgentRole::Designer, u).map(drop),
            _ => ws.post_message("poll", u, &format!("note {i}")).map(drop),
        };
        r.map_err(|e| format!("write {i}: {e}"))?;
        if rng.random_bool(0.5) {
            thread::sleep(Duration::from_micros(rng.random_range(0..200)));
        }
    }
    done.store(true, Ordering::SeqCst);
    Ok(())
}

fn poll_trial(seed: u64) -> Result<usize, String> {
    let ws = Workshop::builder()
        .scenes(Arc::new(codesign_core::scene::MockSceneProvider { width: 16, height: 16 }))
        .build();
    let users = names(3);
    for u in &users {
        ws.create_or_join_room(u, "poll").map_err(|e| e.to_string())?;
    }
    ws.register_expert("poll", AgentRole::Designer, RegistrationPhase::AtCreation)
        .map_err(|e| e.to_string())?;
    for u in &users {
        ws.set_ready("poll", u, true).map_err(|e| e.to_string())?;
    }

    let done = Arc::new(AtomicBool::new(false));
    let handle = {
        let (ws, users, done) = (ws.clone(), users.clone(), Arc::clone(&done));
        thread::spawn(move || writer(ws, users, seed, done))
    };

    let mut rng = StdRng::seed_from_u64(seed ^ 0xa5a5);
    let mut seen: Vec<ChatMessage> = Vec::new();
    let mut polls = 0;
    loop {
        let finished = done.load(Ordering::SeqCst);
        let since = seen.last().map_or(0, |m| m.seq);
        let delta = ws.get_room_state("poll", since).map_err(|e| e.to_string())?;
        polls += 1;
        for m in delta.messages {
            let expected = seen.len() as u64 + 1;
            ensure!(m.seq == expected, "poll {polls}: got seq {} expecting {expected}", m.seq);
            seen.push(m);
        }
        if finished {
            break;
        }
        thread::sleep(Duration::from_micros(rng.random_range(0..400)));
    }
    handle.join().map_err(|_| "writer panicked".to_string())??;
    let log = ws.message_log("poll").map_err(|e| e.to_string())?;
    ensure!(seen == log, "poller saw {} events, log has {}", seen.len(), log.len());
    check_partitions(&ws, "poll")?;
    Ok(polls)
}

pub fn run() -> Result<String, String> {
    let session = scenario::play(Arc::new(codesign_core::MemoryStore::new()))?;
    let scenario_len = check_partitions(&session.ws, scenario::ROOM)?;

    let rounds = Workshop::in_memory();
    open_room(&rounds, "r", &names(4))?;
    for i in 0..12 {
        rounds
            .post_message("r", &format!("user{}", i % 4), "idea")
            .map_err(|e| e.to_string())?;
    }
    check_partitions(&rounds, "r")?;

    let mut rng = StdRng::seed_from_u64(seed_for("polling-consistency"));
    let mut total_polls = 0;
    for trial in 0..POLLER_TRIALS {
        total_polls += poll_trial(rng.random()).map_err(|e| format!("trial {trial}: {e}"))?;
    }
    Ok(format!(
        "partitions exact for every since (scenario log {scenario_len}); {POLLER_TRIALS} concurrent pollers, {total_polls} polls, each event seen once in order"
    ))
}
