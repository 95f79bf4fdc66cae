use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seventeen verbs a design prompt may open with.
pub const STRONG_VERBS: [&str; 17] = [
    "Add", "Increase", "Reduce", "Convert", "Provide", "Prioritize", "Create", "Plant", "Install",
    "Widen", "Separate", "Buffer", "Shade", "Calm", "Slow", "Expand", "Protect",
];

/// Usernames shorter than this are not scanned for; one- and two-letter
/// names would match ordinary words.
pub const MIN_SCANNED_USERNAME_CHARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptGrammar {
    pub verbs: Vec<String>,
    pub min_words: usize,
    pub max_words: usize,
    /// Fraction of a prompt's tokens that, appearing as one contiguous run
    /// in a single source message, marks the prompt as copied.
    pub transcript_overlap: f64,
}

impl Default for PromptGrammar {
    fn default() -> Self {
        Self {
            verbs: STRONG_VERBS.iter().map(|v| v.to_string()).collect(),
            min_words: 6,
            max_words: 14,
            transcript_overlap: 0.7,
        }
    }
}

impl PromptGrammar {
    pub fn with_extra_verbs<I, S>(mut self, extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for verb in extra {
            let verb = verb.into();
            if !self.verbs.iter().any(|v| v.eq_ignore_ascii_case(&verb)) {
                self.verbs.push(verb);
            }
        }
        self
    }

    pub fn is_strong_verb(&self, word: &str) -> bool {
        let word = word.to_lowercase();
        self.verbs.iter().any(|v| v.to_lowercase() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    NoStrongVerb,
    TooShort,
    TooLong,
    MetadataLeak,
    TranscriptCopy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub valid: bool,
    pub word_count: usize,
    pub first_word: String,
    pub violations: Vec<Violation>,
}

/// Room-specific material a prompt must not leak or copy.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationContext<'a> {
    pub usernames: &'a [String],
    /// Source messages; empty disables the copy check.
    pub transcript: &'a [String],
}

static ROUND_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bround\s*#?\s*[0-9]+").expect("valid regex"));
static COORDINATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?[0-9]{1,3}\.[0-9]{4,}").expect("valid regex"));
static CLOCK_TIME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[0-9]{1,2}:[0-9]{2}\b").expect("valid regex"));
static PANO_KEYWORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bpano(rama)?[\s_-]?ids?\b").expect("valid regex"));
static LONG_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z0-9_-]{20,}").expect("valid regex"));
static ROLE_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(ai\s+(facilitator|designer|planner)|facilitator)\b").expect("valid regex")
});

/// Words are maximal runs of non-whitespace.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn trim_punctuation(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercased tokens with surrounding punctuation removed; empty tokens
/// (pure punctuation) are dropped.
pub(crate) fn normalized_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| trim_punctuation(t).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn validate_prompt(
    text: &str,
    grammar: &PromptGrammar,
    ctx: &ValidationContext<'_>,
) -> Result<ValidationResult> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    let first_word = text
        .split_whitespace()
        .next()
        .map(trim_punctuation)
        .unwrap_or_default()
        .to_string();
    let words = word_count(text);

    let mut violations = Vec::new();
    if !grammar.is_strong_verb(&first_word) {
        violations.push(Violation::NoStrongVerb);
    }
    if words < grammar.min_words {
        violations.push(Violation::TooShort);
    } else if words > grammar.max_words {
        violations.push(Violation::TooLong);
    }
    if leaks_metadata(text, ctx.usernames) {
        violations.push(Violation::MetadataLeak);
    }
    if copies_transcript(text, ctx.transcript, grammar.transcript_overlap) {
        violations.push(Violation::TranscriptCopy);
    }
    Ok(ValidationResult {
        valid: violations.is_empty(),
        word_count: words,
        first_word,
        violations,
    })
}

fn leaks_metadata(text: &str, usernames: &[String]) -> bool {
    if ROUND_LABEL.is_match(text)
        || COORDINATE.is_match(text)
        || CLOCK_TIME.is_match(text)
        || PANO_KEYWORD.is_match(text)
        || ROLE_LABEL.is_match(text)
    {
        return true;
    }
    let id_like = LONG_ID.find_iter(text).any(|m| {
        let s = m.as_str();
        s.chars().any(|c| c.is_ascii_digit()) && s.chars().any(|c| c.is_ascii_alphabetic())
    });
    if id_like {
        return true;
    }
    usernames
        .iter()
        .map(|u| u.trim())
        .filter(|u| u.chars().count() >= MIN_SCANNED_USERNAME_CHARS)
        .any(|u| mentions_name(text, u))
}

/// Case-insensitive whole-name match. Names are delimited by anything that
/// is neither a letter nor a digit, so `alice_b` mentions `alice` but
/// `malice` and `alice2` do not.
fn mentions_name(text: &str, name: &str) -> bool {
    let hay: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let needle: Vec<char> = name.chars().flat_map(char::to_lowercase).collect();
    let n = needle.len();
    if n == 0 || n > hay.len() {
        return false;
    }
    let name_char = |c: char| c.is_alphabetic() || c.is_numeric();
    hay.windows(n).enumerate().any(|(i, w)| {
        w == needle.as_slice()
            && (i == 0 || !name_char(hay[i - 1]))
            && (i + n == hay.len() || !name_char(hay[i + n]))
    })
}

fn copies_transcript(text: &str, transcript: &[String], threshold: f64) -> bool {
    let prompt = normalized_tokens(text);
    if prompt.is_empty() {
        return false;
    }
    transcript.iter().any(|message| {
        let source = normalized_tokens(message);
        let run = longest_common_run(&prompt, &source);
        run as f64 >= threshold * prompt.len() as f64 - 1e-9
    })
}

/// Length of the longest run of tokens appearing contiguously in both.
fn longest_common_run(a: &[String], b: &[String]) -> usize {
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            if x == y {
                cur[j + 1] = prev[j] + 1;
                best = best.max(cur[j + 1]);
            }
        }
        prev = cur;
    }
    best
}
