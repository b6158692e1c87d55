//! Timed event scripts.
//!
//! One event per line: `t_ms kind seq text...` where kind is `partial`,
//! `final` or `ack`. For acks the text is the ack kind (default
//! `user_nod`) and seq may be `-`. Lines starting with `#expect` carry
//! expectations about the preceding event: `#expect action=<label>` or
//! `#expect query=<json>`. Other `#` lines and blank lines are ignored.

use std::path::Path;

use crate::spot_search::SearchQuery;
use crate::voice_action::{AckKind, VoiceActionType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranscriptError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: sequence {got} is not after {last}")]
    OutOfOrder { line: usize, last: u64, got: u64 },
    #[error("line {line}: time {got} ms is before {last} ms")]
    TimeWentBackwards { line: usize, last: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranscriptEvent {
    Asr { t_ms: u64, seq: u64, is_final: bool, text: String },
    Ack { t_ms: u64, kind: AckKind },
}

impl TranscriptEvent {
    pub fn t_ms(&self) -> u64 {
        match self {
            TranscriptEvent::Asr { t_ms, .. } | TranscriptEvent::Ack { t_ms, .. } => *t_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    /// Voice decision for the most recent ASR event.
    Action(VoiceActionType),
    /// The latest query sent to clients.
    Query(SearchQuery),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranscriptEntry {
    Event { line: usize, event: TranscriptEvent },
    Expect { line: usize, expectation: Expectation },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        let text = std::fs::read_to_string(path).map_err(|e| TranscriptError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        parse_transcript(&text)
    }

    pub fn events(&self) -> impl Iterator<Item = &TranscriptEvent> {
        self.entries.iter().filter_map(|e| match e {
            TranscriptEntry::Event { event, .. } => Some(event),
            TranscriptEntry::Expect { .. } => None,
        })
    }

    pub fn expectation_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, TranscriptEntry::Expect { .. }))
            .count()
    }
}

fn malformed(line: usize, message: impl Into<String>) -> TranscriptError {
    TranscriptError::Malformed {
        line,
        message: message.into(),
    }
}

fn parse_expectation(line: usize, body: &str) -> Result<Expectation, TranscriptError> {
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| malformed(line, "expected `#expect key=value`"))?;
    match key.trim() {
        "action" => value
            .trim()
            .parse()
            .map(Expectation::Action)
            .map_err(|e: String| malformed(line, e)),
        "query" => serde_json::from_str(value.trim())
            .map(Expectation::Query)
            .map_err(|e| malformed(line, format!("bad query: {e}"))),
        other => Err(malformed(line, format!("unknown expectation `{other}`"))),
    }
}

pub fn parse_transcript(text: &str) -> Result<Transcript, TranscriptError> {
    let mut entries = Vec::new();
    let mut last_seq: Option<u64> = None;
    let mut last_t = 0u64;
    let mut seen_asr = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(body) = trimmed.strip_prefix("#expect") {
            let expectation = parse_expectation(line, body.trim())?;
            if matches!(expectation, Expectation::Action(_)) && !seen_asr {
                return Err(malformed(line, "action expectation before any ASR event"));
            }
            entries.push(TranscriptEntry::Expect { line, expectation });
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.splitn(4, char::is_whitespace);
        let t_ms: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed(line, "time must be a non-negative integer"))?;
        let kind = parts.next().ok_or_else(|| malformed(line, "missing event kind"))?;
        let seq = parts.next().ok_or_else(|| malformed(line, "missing sequence number"))?;
        let rest = parts.next().unwrap_or("").trim().to_string();
        if t_ms < last_t {
            return Err(TranscriptError::TimeWentBackwards {
                line,
                last: last_t,
                got: t_ms,
            });
        }
        last_t = t_ms;
        let event = match kind {
            "partial" | "final" => {
                let seq: u64 = seq
                    .parse()
                    .map_err(|_| malformed(line, format!("bad sequence `{seq}`")))?;
                if let Some(last) = last_seq {
                    if seq <= last {
                        return Err(TranscriptError::OutOfOrder { line, last, got: seq });
                    }
                }
                last_seq = Some(seq);
                seen_asr = true;
                TranscriptEvent::Asr {
                    t_ms,
                    seq,
                    is_final: kind == "final",
                    text: rest,
                }
            }
            "ack" => {
                if seq != "-" && seq.parse::<u64>().is_err() {
                    return Err(malformed(line, format!("bad sequence `{seq}`")));
                }
                let kind = if rest.is_empty() {
                    AckKind::UserNod
                } else {
                    rest.parse().map_err(|e: String| malformed(line, e))?
                };
                TranscriptEvent::Ack { t_ms, kind }
            }
            other => return Err(malformed(line, format!("unknown event kind `{other}`"))),
        };
        entries.push(TranscriptEntry::Event { line, event });
    }
    Ok(Transcript { entries })
}
