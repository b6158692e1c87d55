use std::path::Path;

use serde::Serialize;

use super::transcript::{Expectation, Transcript, TranscriptEntry, TranscriptError, TranscriptEvent};
use super::{ActionKind, EngineAction, EngineError, EngineEvent, Session};
use crate::common_ground::CommonGroundTree;
use crate::spot_search::{Facet, SearchQuery};
use crate::voice_action::{AckEvent, AsrEvent};

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("line {line}: {source}")]
    Engine { line: usize, source: EngineError },
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    /// Decision and action lines in emission order.
    pub log: Vec<String>,
    pub actions: usize,
    pub tree: CommonGroundTree,
    pub matched: usize,
    pub mismatched: usize,
    pub mismatches: Vec<String>,
    pub success: bool,
}

impl ReplayReport {
    pub fn log_text(&self) -> String {
        let mut s = self.log.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    /// Every `query_update` payload, in order.
    pub fn queries(&self) -> Vec<SearchQuery> {
        self.log
            .iter()
            .filter_map(|l| l.split_once(" query_update "))
            .map(|(_, json)| serde_json::from_str(json).expect("logged queries parse"))
            .collect()
    }
}

fn same_facets(a: &SearchQuery, b: &SearchQuery) -> bool {
    Facet::ALL.into_iter().all(|f| {
        let mut x: Vec<_> = a.facet(f).to_vec();
        let mut y: Vec<_> = b.facet(f).to_vec();
        x.sort();
        x.dedup();
        y.sort();
        y.dedup();
        x == y
    })
}

/// Upper bound on timers fired after the last event; each one releases a
/// chunk, so any finite response drains well within it.
const DRAIN_LIMIT: usize = 10_000;

fn fire_timers_until(session: &mut Session, t_ms: Option<u64>, out: &mut Vec<EngineAction>) -> Result<(), EngineError> {
    let mut fired = 0;
    while let Some((kind, due_ms)) = session.next_timer() {
        if t_ms.is_some_and(|t| due_ms > t) || fired >= DRAIN_LIMIT {
            break;
        }
        out.extend(session.handle_event(EngineEvent::Timer { kind, due_ms })?);
        fired += 1;
    }
    Ok(())
}

/// Drive `session` through a parsed transcript on a virtual clock.
pub fn replay_events(session: &mut Session, transcript: &Transcript) -> Result<ReplayReport, ReplayError> {
    let mut actions: Vec<EngineAction> = Vec::new();
    let mut last_asr_seq: Option<u64> = None;
    let (mut matched, mut mismatched) = (0, 0);
    let mut mismatches = Vec::new();

    for entry in &transcript.entries {
        match entry {
            TranscriptEntry::Event { line, event } => {
                let wrap = |source| ReplayError::Engine { line: *line, source };
                fire_timers_until(session, Some(event.t_ms()), &mut actions).map_err(wrap)?;
                let engine_event = match event {
                    TranscriptEvent::Asr { t_ms, seq, is_final, text } => {
                        last_asr_seq = Some(*seq);
                        EngineEvent::Asr(AsrEvent {
                            session_id: session.id().to_string(),
                            partial_text: text.clone(),
                            is_final: *is_final,
                            sequence: *seq,
                            timestamp_ms: *t_ms,
                        })
                    }
                    TranscriptEvent::Ack { t_ms, kind } => EngineEvent::Ack(AckEvent {
                        session_id: session.id().to_string(),
                        kind: *kind,
                        timestamp_ms: *t_ms,
                    }),
                };
                actions.extend(session.handle_event(engine_event).map_err(wrap)?);
            }
            TranscriptEntry::Expect { line, expectation } => {
                let failure = match expectation {
                    Expectation::Action(want) => {
                        let seq = last_asr_seq.expect("parser rejects action expectations before ASR events");
                        let got = session
                            .decisions()
                            .iter()
                            .find(|d| d.triggering_sequence == seq)
                            .map(|d| d.action);
                        (got != Some(*want)).then(|| {
                            format!(
                                "line {line}: seq {seq} expected action={want}, got {}",
                                got.map_or("nothing".to_string(), |a| a.to_string())
                            )
                        })
                    }
                    Expectation::Query(want) => {
                        let got = actions.iter().rev().find_map(|a| match &a.kind {
                            ActionKind::QueryUpdate(q) => Some(q),
                            _ => None,
                        });
                        match got {
                            Some(q) if same_facets(q, want) => None,
                            Some(q) => Some(format!(
                                "line {line}: expected query {}, got {}",
                                serde_json::to_string(want).unwrap_or_default(),
                                serde_json::to_string(q).unwrap_or_default()
                            )),
                            None => Some(format!("line {line}: expected a query update, none sent")),
                        }
                    }
                };
                match failure {
                    None => matched += 1,
                    Some(msg) => {
                        mismatched += 1;
                        mismatches.push(msg);
                    }
                }
            }
        }
    }
    let end_line = transcript.entries.len();
    fire_timers_until(session, None, &mut actions).map_err(|source| ReplayError::Engine { line: end_line, source })?;

    Ok(ReplayReport {
        log: session.log().to_vec(),
        actions: actions.len(),
        tree: session.tree().clone(),
        matched,
        mismatched,
        success: mismatched == 0,
        mismatches,
    })
}

/// Load a transcript file and replay it in a fresh session.
pub fn replay_transcript(path: &Path, session: &mut Session) -> Result<ReplayReport, ReplayError> {
    let transcript = Transcript::load(path)?;
    replay_events(session, &transcript)
}
