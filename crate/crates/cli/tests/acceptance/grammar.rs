//! Prompt validator against a hand-labelled corpus and a regex-free
//! reference implementation.

use std::collections::HashSet;

use codesign_core::prompts::{validate_prompt, ValidationContext};
use codesign_core::{Error, PromptGrammar, ValidationResult, Violation};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use crate::support::seed_for;

const GENERATED: usize = 400;
const MIN_CORPUS: usize = 200;
const CANONICAL: &str = "Add shaded seating clusters along active pedestrian corridors";

struct Case {
    text: String,
    users: Vec<String>,
    transcript: Vec<String>,
    /// Hand label: V no verb, S short, L long, M metadata, C copy.
    label: Option<&'static str>,
}

fn case(text: &str, users: &[&str], transcript: &[&str], label: &'static str) -> Case {
    Case {
        text: text.to_string(),
        users: users.iter().map(|s| s.to_string()).collect(),
        transcript: transcript.iter().map(|s| s.to_string()).collect(),
        label: Some(label),
    }
}

fn labelled() -> Vec<Case> {
    let benches = "add sustainable wooden benches and planters along the sidewalk";
    let bus = "wide shaded benches beside the bus stop";
    vec![
        case(CANONICAL, &[], &[], ""),
        case("add shaded seating clusters along active pedestrian corridors", &[], &[], ""),
        case("ADD shaded seating clusters along active pedestrian corridors", &[], &[], ""),
        case("Add shaded seating clusters along active pedestrian corridors.", &[], &[], ""),
        case("Plant street trees along the corridor to buffer pedestrians from passing traffic", &[], &[], ""),
        case("Trees", &[], &[], "VS"),
        case("Add trees", &[], &[], "S"),
        case("Add trees near the corner", &[], &[], "S"),
        case("Add trees near the busy corner", &[], &[], ""),
        case("Add a long list of many different things all along the whole street from one end to the other", &[], &[], "L"),
        case("Install fourteen words exactly here: one two three four five six seven eight nine", &[], &[], ""),
        case("Install fifteen words exactly here: one two three four five six seven eight nine ten", &[], &[], "L"),
        case("We should add benches along the sidewalk edge", &[], &[], "V"),
        case("Adding benches along the sidewalk edge would help", &[], &[], "V"),
        case("\"Reduce\" traffic lanes to add a planted median strip", &[], &[], ""),
        case("Reduce, traffic lanes to add a planted median strip", &[], &[], ""),
        case("Make the street greener with trees and planters", &[], &[], "V"),
        case("Improve lighting along the underpass for evening walkers", &[], &[], "V"),
        case("- Add benches along the whole riverside walking path", &[], &[], "V"),
        case("Add - benches along the whole riverside walking path", &[], &[], ""),
        case("Add  benches\tnear the   corner with extra spacing", &[], &[], ""),
        case("Shade the playground with canopy trees and pergolas", &[], &[], ""),
        case("Calm traffic near the school with raised crosswalks", &[], &[], ""),
        case("Slow turning vehicles with tighter corner radii at intersections", &[], &[], ""),
        case("Protect cyclists with a curb-separated lane on both sides", &[], &[], ""),
        case("Expand the plaza into the unused parking lane area", &[], &[], ""),
        case("Buffer the sidewalk from traffic using planted strips", &[], &[], ""),
        case("Separate bike and bus lanes with low planters", &[], &[], ""),
        case("Prioritize pedestrians at crossings with longer signal phases", &[], &[], ""),
        case("Convert two parking spaces into a community parklet", &[], &[], ""),
        case("Create a small pocket park at the vacant corner", &[], &[], ""),
        case("Increase tree canopy coverage along the southern sidewalk", &[], &[], ""),
        case("Widen the sidewalk near the transit stop entrance", &[], &[], ""),
        case("Provide bike racks next to the library entrance", &[], &[], ""),
        case("Install wayfinding signs at the main plaza entrances", &[], &[], ""),
        case("Add benches near the café and the bakery entrance", &[], &[], ""),
        // round labels
        case("Add benches as discussed in round 2 near the corner", &[], &[], "M"),
        case("Add benches as discussed in Round #3 near the corner", &[], &[], "M"),
        case("Add benches as discussed in round3 near the corner", &[], &[], "M"),
        case("Add signage for Route 9 and round 10K race finish", &[], &[], "M"),
        case("Add a small roundabout 2 blocks north of the school", &[], &[], ""),
        case("Add planters around 3 corners of the plaza edge", &[], &[], ""),
        case("Add a mural honoring the round table of neighbors", &[], &[], ""),
        // coordinates
        case("Add benches at 40.74844 -73.98566 along the curb edge", &[], &[], "M"),
        case("Reduce lane width to 3.0000 meters near the school", &[], &[], "M"),
        case("Add benches at 40.7 along the curb edge today", &[], &[], ""),
        case("Add benches spaced 2.5 meters apart along the curb", &[], &[], ""),
        // clock times
        case("Add benches by 14:05 along the curb edge near shops", &[], &[], "M"),
        case("Add benches by 9:30 along the curb edge near shops", &[], &[], "M"),
        case("Add benches near the 5:00 pm bus stop shelter", &[], &[], "M"),
        case("Reduce speed near the school between 8:15 and 9:00", &[], &[], "M"),
        case("Add benches rated 123:45 along the curb edge near shops", &[], &[], ""),
        case("Add benches near gate a9:30 along the curb edge", &[], &[], ""),
        case("Add benches near gate 9:305 along the curb edge", &[], &[], ""),
        // panorama identifiers
        case("Add benches where pano ID shows the broken curb edge", &[], &[], "M"),
        case("Add benches where panorama_id shows the broken curb edge", &[], &[], "M"),
        case("Add benches where the panoIDs show broken curb edges", &[], &[], "M"),
        case("Add benches near pano-id marker along the curb edge", &[], &[], "M"),
        case("Add benches near panorama id 7 along the curb edge", &[], &[], "M"),
        case("Add benches near Pano Ids along the curb edge", &[], &[], "M"),
        case("Add panoramic viewing decks along the river walk", &[], &[], ""),
        case("Add a pano idea board near the library entrance", &[], &[], ""),
        case("Add benches near pano  id marker along the curb", &[], &[], ""),
        // opaque identifiers
        case("Add benches near CAoSLEFGaVNxdWVyYTEyMzQ1Ng along the curb edge", &[], &[], "M"),
        case("Add benches near the abcdefghijklmnopqrstuvwxyz letters mural", &[], &[], ""),
        case("Add benches near 123456789012345678901234 on the curb edge", &[], &[], ""),
        case("Add benches near abc123def456ghi789 on the curb edge", &[], &[], ""),
        // role labels
        case("Add benches that the AI Planner suggested along the curb", &[], &[], "M"),
        case("Add benches that the facilitator suggested along the curb", &[], &[], "M"),
        case("Add benches that the ai   designer suggested along the curb", &[], &[], "M"),
        case("Add benches that facilitators suggested along the curb edge", &[], &[], ""),
        case("Add benches that AI planners suggested along the curb", &[], &[], ""),
        case("Add benches that AI-designer sketches suggested along curbs", &[], &[], ""),
        // usernames
        case("Add more trees near alice house by the old panorama spot", &["alice"], &[], "M"),
        case("Add more trees near the malice house by the old spot", &["alice"], &[], ""),
        case("Add more trees near ALICE's house by the old spot", &["alice"], &[], "M"),
        case("Add more trees near alice_b house by the old spot", &["alice"], &[], "M"),
        case("Add more trees near alice2 house by the old spot", &["alice"], &[], ""),
        case("Add more trees near bo house by the old spot", &["bo"], &[], ""),
        case("Add a bench near Ben's favorite corner by the shops", &["Ben"], &[], "M"),
        case("Add a bench near benches by the corner shops today", &["ben"], &[], ""),
        case("Add planters", &["Add"], &[], "SM"),
        case("Add more trees near  dana  and the old shops", &["  dana "], &[], "M"),
        // copied transcript
        case("Add sustainable wooden benches and planters along the sidewalk", &[], &[benches], "C"),
        case("Provide wooden seating and planters beside the sidewalk edge", &[], &[benches], ""),
        case(
            "Install on-street trash containers to replace open sidewalk piles",
            &[],
            &["replace the open-sidewalk piling with on-street trash containers"],
            "",
        ),
        case(
            "Add on-street trash containers with lids near the crossing",
            &[],
            &["we need on-street trash containers with lids near the crossing please"],
            "C",
        ),
        case("Add wide shaded benches beside the bus stop for riders", &[], &[bus], "C"),
        case(
            "Add wide shaded benches beside the bus stop for riders",
            &[],
            &["wide shaded benches beside the bus"],
            "",
        ),
        case(
            "Add shade, trees, and benches near the school gate",
            &[],
            &["Shade trees and benches near the school gate!"],
            "C",
        ),
        case(
            "Add shaded seating clusters along active pedestrian corridors",
            &[],
            &["more trees please", "i like the shaded seating idea"],
            "",
        ),
        // several at once
        case("trees near alice", &["alice"], &[], "VSM"),
        case("The facilitator said round 2 was good", &[], &[], "VM"),
        case("Benches", &[], &["benches"], "VSC"),
    ]
}

const OPENERS_OK: [&str; 17] = [
    "Add", "Increase", "Reduce", "Convert", "Provide", "Prioritize", "Create", "Plant", "Install", "Widen",
    "Separate", "Buffer", "Shade", "Calm", "Slow", "Expand", "Protect",
];
const OPENERS_BAD: [&str; 12] = [
    "The", "Maybe", "Benches", "We", "Please", "Adding", "Trees", "Make", "Improve", "Build", "Planting", "Shaded",
];
const VOCAB: [&str; 40] = [
    "trees", "along", "the", "sidewalk", "with", "benches", "and", "planters", "near", "corner", "shaded",
    "seating", "for", "pedestrians", "bike", "lanes", "wider", "crossings", "lighting", "plaza", "bus", "stop",
    "shelter", "curb", "school", "green", "strip", "traffic", "calming", "raised", "café", "street-level",
    "well-lit", "murals", "on", "at", "community", "garden", "safer", "kids",
];
const FRAGMENTS: [&str; 42] = [
    "round 2", "Round #4", "round12", "ROUND  7", "rounds 3", "around 3", "roundabout 1", "round-up",
    "40.7128", "-73.9857", "3.14", "12.345", "1234.56789", "v2.10000",
    "9:30", "14:05", "123:45", "9:305", "a9:30", "9:3", "(10:15)",
    "pano id", "panorama_id", "panoIDs", "PANO-ID", "panoramic", "pano idea", "pano_ids", "xpano id",
    "CAoSLEFGaVNxdWVyYTEyMzQ1Ng", "abcdefghijklmnopqrstu", "0123456789012345678901", "ab12cd34ef56gh78ij9",
    "AI Facilitator", "ai   planner", "the facilitator", "facilitators", "AI planners", "ai-designer", "AI Designer's",
    "5:00pm", "round#9",
];
const NAMES: [&str; 8] = ["alice", "Bo", "ben", "Chen", "dana_r", "li", "Mar", "eve"];

fn vary_case(rng: &mut StdRng, s: &str) -> String {
    match rng.random_range(0..4) {
        0 => s.to_lowercase(),
        1 => s.to_uppercase(),
        _ => s.to_string(),
    }
}

fn generated(rng: &mut StdRng, count: usize) -> Vec<Case> {
    (0..count)
        .map(|_| {
            let mut words: Vec<String> = Vec::new();
            let opener = if rng.random_bool(0.65) {
                let v = *OPENERS_OK.choose(rng).expect("non-empty");
                match rng.random_range(0..6) {
                    0 => format!("\"{v}"),
                    1 => format!("{v}:"),
                    _ => vary_case(rng, v),
                }
            } else {
                OPENERS_BAD.choose(rng).expect("non-empty").to_string()
            };
            words.push(opener);
            for _ in 0..rng.random_range(0..=16) {
                words.push(VOCAB.choose(rng).expect("non-empty").to_string());
            }
            if rng.random_bool(0.45) {
                let at = rng.random_range(1..=words.len());
                words.insert(at, FRAGMENTS.choose(rng).expect("non-empty").to_string());
            }
            let users: Vec<String> = if rng.random_bool(0.5) {
                let n = rng.random_range(1..=3);
                NAMES.choose_multiple(rng, n).map(|s| s.to_string()).collect()
            } else {
                Vec::new()
            };
            if !users.is_empty() && rng.random_bool(0.5) {
                let name = users.choose(rng).expect("non-empty");
                let token = match rng.random_range(0..5) {
                    0 => format!("{name}'s"),
                    1 => format!("m{name}"),
                    2 => format!("{name}2"),
                    _ => vary_case(rng, name),
                };
                let at = rng.random_range(1..=words.len());
                words.insert(at, token);
            }
            let mut text = words.join(" ");
            if rng.random_bool(0.2) {
                text.push('.');
            }
            let transcript = if rng.random_bool(0.35) {
                let len = words.len();
                let start = rng.random_range(0..len);
                let end = rng.random_range(start..=len);
                let mut copied = vec!["i think".to_string()];
                copied.extend(words[start..end].iter().map(|w| w.to_lowercase()));
                copied.push("please!".into());
                vec!["something unrelated about parking".to_string(), copied.join(" ")]
            } else {
                Vec::new()
            };
            Case {
                text,
                users,
                transcript,
                label: None,
            }
        })
        .collect()
}

// ---- reference implementation ----

const REFERENCE_VERBS: [&str; 17] = [
    "add", "increase", "reduce", "convert", "provide", "prioritize", "create", "plant", "install", "widen",
    "separate", "buffer", "shade", "calm", "slow", "expand", "protect",
];

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphabetic() || c.is_ascii_digit()
}

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Word boundary between `s[i - 1]` and `s[i]`.
fn boundary(s: &[char], i: usize) -> bool {
    let before = i > 0 && is_word(s[i - 1]);
    let after = i < s.len() && is_word(s[i]);
    before != after
}

fn has_at(s: &[char], i: usize, word: &str) -> bool {
    let w: Vec<char> = word.chars().collect();
    i + w.len() <= s.len() && w.iter().enumerate().all(|(k, &c)| fold(s[i + k]) == c)
}

fn digit_at(s: &[char], i: usize) -> bool {
    i < s.len() && s[i].is_ascii_digit()
}

fn round_label(s: &[char]) -> bool {
    (0..s.len()).any(|i| {
        if !(boundary(s, i) && has_at(s, i, "round")) {
            return false;
        }
        let mut j = i + 5;
        while j < s.len() && s[j].is_whitespace() {
            j += 1;
        }
        if j < s.len() && s[j] == '#' {
            j += 1;
        }
        while j < s.len() && s[j].is_whitespace() {
            j += 1;
        }
        digit_at(s, j)
    })
}

fn coordinate(s: &[char]) -> bool {
    (1..s.len()).any(|i| s[i] == '.' && s[i - 1].is_ascii_digit() && (1..=4).all(|k| digit_at(s, i + k)))
}

fn clock_time(s: &[char]) -> bool {
    (0..s.len()).any(|p| {
        if s[p] != ':' {
            return false;
        }
        let mut k = 0;
        while k < p && s[p - 1 - k].is_ascii_digit() {
            k += 1;
        }
        (1..=2).contains(&k) && boundary(s, p - k) && digit_at(s, p + 1) && digit_at(s, p + 2) && boundary(s, p + 3)
    })
}

fn pano_keyword(s: &[char]) -> bool {
    (0..s.len()).any(|i| {
        if !(boundary(s, i) && has_at(s, i, "pano")) {
            return false;
        }
        let mut stems = vec![i + 4];
        if has_at(s, i + 4, "rama") {
            stems.push(i + 8);
        }
        stems.into_iter().any(|j| {
            let mut starts = vec![j];
            if j < s.len() && (s[j].is_whitespace() || s[j] == '_' || s[j] == '-') {
                starts.push(j + 1);
            }
            starts.into_iter().any(|k| {
                has_at(s, k, "id") && (boundary(s, k + 2) || (has_at(s, k + 2, "s") && boundary(s, k + 3)))
            })
        })
    })
}

fn opaque_id(s: &[char]) -> bool {
    let id_char = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '-';
    let mut i = 0;
    while i < s.len() {
        if !id_char(s[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < s.len() && id_char(s[i]) {
            i += 1;
        }
        let run = &s[start..i];
        if run.len() >= 20 && run.iter().any(|c| c.is_ascii_digit()) && run.iter().any(|c| c.is_ascii_alphabetic()) {
            return true;
        }
    }
    false
}

fn role_label(s: &[char]) -> bool {
    (0..s.len()).any(|i| {
        if !boundary(s, i) {
            return false;
        }
        if has_at(s, i, "facilitator") && boundary(s, i + 11) {
            return true;
        }
        if !has_at(s, i, "ai") {
            return false;
        }
        let mut j = i + 2;
        while j < s.len() && s[j].is_whitespace() {
            j += 1;
        }
        j > i + 2
            && ["facilitator", "designer", "planner"]
                .iter()
                .any(|w| has_at(s, j, w) && boundary(s, j + w.len()))
    })
}

fn mentions(s: &[char], name: &str) -> bool {
    let n = name.chars().count();
    (0..s.len()).any(|i| {
        has_at(s, i, &name.to_lowercase())
            && (i == 0 || !is_name_char(s[i - 1]))
            && (i + n == s.len() || !is_name_char(s[i + n]))
    })
}

fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn longest_shared_run(a: &[String], b: &[String]) -> usize {
    let mut best = 0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            best = best.max(k);
        }
    }
    best
}

fn reference(text: &str, users: &[String], transcript: &[String]) -> Option<ValidationResult> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    let first_word = words[0].trim_matches(|c: char| !c.is_alphanumeric()).to_string();
    let chars: Vec<char> = text.chars().collect();

    let mut violations = Vec::new();
    if !REFERENCE_VERBS.contains(&first_word.to_lowercase().as_str()) {
        violations.push(Violation::NoStrongVerb);
    }
    if words.len() < 6 {
        violations.push(Violation::TooShort);
    }
    if words.len() > 14 {
        violations.push(Violation::TooLong);
    }
    let named = users
        .iter()
        .map(|u| u.trim())
        .filter(|u| u.chars().count() >= 3)
        .any(|u| mentions(&chars, u));
    if round_label(&chars)
        || coordinate(&chars)
        || clock_time(&chars)
        || pano_keyword(&chars)
        || opaque_id(&chars)
        || role_label(&chars)
        || named
    {
        violations.push(Violation::MetadataLeak);
    }
    let prompt = tokens(text);
    if !prompt.is_empty()
        && transcript
            .iter()
            .any(|m| 10 * longest_shared_run(&prompt, &tokens(m)) >= 7 * prompt.len())
    {
        violations.push(Violation::TranscriptCopy);
    }
    Some(ValidationResult {
        valid: violations.is_empty(),
        word_count: words.len(),
        first_word,
        violations,
    })
}

fn decode(label: &str) -> Vec<Violation> {
    label
        .chars()
        .map(|c| match c {
            'V' => Violation::NoStrongVerb,
            'S' => Violation::TooShort,
            'L' => Violation::TooLong,
            'M' => Violation::MetadataLeak,
            'C' => Violation::TranscriptCopy,
            other => panic!("unknown label {other}"),
        })
        .collect()
}

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(seed_for("prompt-grammar"));
    let mut corpus = labelled();
    let hand = corpus.len();
    corpus.extend(generated(&mut rng, GENERATED));
    ensure!(corpus.len() >= MIN_CORPUS, "corpus has only {} cases", corpus.len());

    let grammar = PromptGrammar::default();
    let mut seen = HashSet::new();
    let mut valid = 0;
    for (i, c) in corpus.iter().enumerate() {
        let ctx = ValidationContext {
            usernames: &c.users,
            transcript: &c.transcript,
        };
        let got = validate_prompt(&c.text, &grammar, &ctx).map_err(|e| format!("case {i} {:?}: {e}", c.text))?;
        let want = reference(&c.text, &c.users, &c.transcript).ok_or(format!("case {i} is blank"))?;
        ensure!(
            got == want,
            "case {i} {:?} users {:?}: validator {got:?}, reference {want:?}",
            c.text,
            c.users
        );
        if let Some(label) = c.label {
            ensure!(
                got.violations == decode(label),
                "case {i} {:?}: expected {label:?}, got {:?}",
                c.text,
                got.violations
            );
        }
        seen.extend(got.violations.iter().copied());
        valid += usize::from(got.valid);
    }

    let canonical = validate_prompt(CANONICAL, &grammar, &ValidationContext::default()).map_err(|e| e.to_string())?;
    ensure!(
        canonical.valid && canonical.word_count == 8 && canonical.first_word == "Add",
        "canonical example: {canonical:?}"
    );
    for blank in ["", "   ", "\t\n"] {
        ensure!(
            validate_prompt(blank, &grammar, &ValidationContext::default()) == Err(Error::EmptyText)
                && reference(blank, &[], &[]).is_none(),
            "blank text {blank:?} is not rejected"
        );
    }
    let classes = [
        Violation::NoStrongVerb,
        Violation::TooShort,
        Violation::TooLong,
        Violation::MetadataLeak,
        Violation::TranscriptCopy,
    ];
    let missing: Vec<_> = classes.iter().filter(|v| !seen.contains(v)).collect();
    ensure!(missing.is_empty(), "violation classes never exercised: {missing:?}");

    Ok(format!(
        "{} cases ({hand} labelled, {GENERATED} generated), {valid} valid, all 5 violation classes, reference agrees",
        corpus.len()
    ))
}
