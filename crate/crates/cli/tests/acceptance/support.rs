use std::sync::Arc;

use codesign_core::canonical::sha256_hex;
use codesign_core::{SteppingClock, ViewParams, Workshop};

const DEFAULT_SEED: u64 = 0x5eed_c0de_2026;

pub fn base_seed() -> u64 {
    std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

/// Independent stream per check, so filtering one does not shift another.
pub fn seed_for(check: &str) -> u64 {
    let digest = sha256_hex(format!("{}:{check}", base_seed()).as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex prefix")
}

pub fn deterministic_workshop() -> Workshop {
    Workshop::builder().clock(Arc::new(SteppingClock::default())).build()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("user{i}")).collect()
}

/// Joins everyone first, then readies everyone.
pub fn open_room(ws: &Workshop, room: &str, names: &[String]) -> Result<(), String> {
    for n in names {
        ws.create_or_join_room(n, room).map_err(|e| format!("join {n}: {e}"))?;
    }
    for n in names {
        ws.set_ready(room, n, true).map_err(|e| format!("ready {n}: {e}"))?;
    }
    Ok(())
}

pub fn view(panorama_id: &str) -> ViewParams {
    ViewParams {
        panorama_id: panorama_id.to_string(),
        heading: 145.0,
        pitch: -5.0,
        fov: 90.0,
        lat: 40.7359,
        lon: -73.9911,
    }
}
