//! Sampling parameters and system prompts as they reach the provider.

use std::collections::BTreeMap;
use std::sync::Arc;

use codesign_core::agents::{ChatProvider, MockChatProvider, RecordingChatProvider};
use codesign_core::canonical::sha256_hex;
use codesign_core::{AgentRole, RegistrationPhase, SteppingClock, Workshop};

use crate::support::{names, view};

/// (max output tokens, temperature, top-p)
const CONSERVATIVE: (u32, f64, f64) = (1024, 0.35, 0.9);
const EXPLORATORY: (u32, f64, f64) = (1024, 0.85, 0.95);

const PROMPT_DIGESTS: [(AgentRole, &str); 4] = [
    (AgentRole::Facilitator, "13498a4118897e40a3cad5a9823ef07395eb52ab57e13f048d89c651fca808f9"),
    (AgentRole::Designer, "2d3b4a205b01348806a63d6e06826f1f9eed4b67618136d69a1d284cda083567"),
    (AgentRole::Planner, "bf558a0ba81d8a8f1a4e63d31d7f8062f33f2ac3da87c66a674f3e2abbd90d98"),
    (AgentRole::PromptParser, "68ee4fc629f762f2adeb7f7d17d2028c8751d14a705e88b934f4b1c3c1419ad5"),
];

fn expected(role: AgentRole) -> (u32, f64, f64) {
    match role {
        AgentRole::Facilitator | AgentRole::PromptParser => CONSERVATIVE,
        AgentRole::Designer | AgentRole::Planner => EXPLORATORY,
    }
}

pub fn run() -> Result<String, String> {
    let recorder = Arc::new(RecordingChatProvider::new(MockChatProvider));
    let ws = Workshop::builder()
        .clock(Arc::new(SteppingClock::default()))
        .chat(Arc::clone(&recorder) as Arc<dyn ChatProvider>)
        .build();
    let users = names(2);
    let err = |e: codesign_core::Error| e.to_string();

    for u in &users {
        ws.create_or_join_room(u, "pin").map_err(err)?;
    }
    ws.register_expert("pin", AgentRole::Designer, RegistrationPhase::AtCreation).map_err(err)?;
    ws.register_expert("pin", AgentRole::Planner, RegistrationPhase::AtCreation).map_err(err)?;
    for u in &users {
        ws.set_ready("pin", u, true).map_err(err)?;
    }
    ws.save_snapshot("pin", &users[0], &view("pano-pin")).map_err(err)?;
    ws.post_message("pin", &users[0], "wider sidewalks by the school").map_err(err)?;
    ws.post_message("pin", &users[1], "more shade at the bus stop").map_err(err)?;
    ws.query_expert("pin", AgentRole::Designer, &users[0]).map_err(err)?;
    ws.query_expert("pin", AgentRole::Planner, &users[1]).map_err(err)?;
    ws.generate_prompt_set("pin", &users[0]).map_err(err)?;

    let digests: BTreeMap<String, AgentRole> = PROMPT_DIGESTS.iter().map(|(r, d)| (d.to_string(), *r)).collect();
    let mut counts = BTreeMap::<AgentRole, usize>::new();
    let requests = recorder.requests();
    for (i, req) in requests.iter().enumerate() {
        let digest = sha256_hex(req.system_prompt.as_bytes());
        let Some(&role) = digests.get(&digest) else {
            return Err(format!("request {i} carries an unpinned system prompt ({digest})"));
        };
        let got = (req.params.max_output_tokens, req.params.temperature, req.params.top_p);
        ensure!(got == expected(role), "request {i} as {role:?}: {got:?}, expected {:?}", expected(role));
        *counts.entry(role).or_default() += 1;
    }
    for (role, _) in PROMPT_DIGESTS {
        ensure!(counts.contains_key(&role), "no recorded request for {role:?}");
        let config = ws.personas().config(role);
        let got = (config.params.max_output_tokens, config.params.temperature, config.params.top_p);
        ensure!(got == expected(role), "configured {role:?}: {got:?}");
    }
    let summary: Vec<String> = counts.iter().map(|(r, n)| format!("{r:?}x{n}")).collect();
    Ok(format!("{} requests ({}) match pinned params and prompt digests", requests.len(), summary.join(" ")))
}
