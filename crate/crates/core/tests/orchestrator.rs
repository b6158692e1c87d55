use std::path::PathBuf;
use std::sync::Arc;

use flowdial_core::llm_backend::{BackendError, BackendMode, Bindings, CancelToken, CompletionResult, LlmBackend, PromptTemplate};
use flowdial_core::orchestrator::{
    parse_transcript, replay_events, replay_transcript, ActionKind, Engine, EngineConfig, EngineError, EngineEvent,
};
use flowdial_core::voice_action::{AckEvent, AckKind, AsrEvent, VoiceActionType};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn engine() -> Engine {
    Engine::new(EngineConfig::default()).unwrap()
}

const TEMPLE: &str =
    "Yes, I want to visit a temple where I can see beautiful autumn leaves and have a panoramic view of Kyoto.";

#[test]
fn sessions_get_distinct_ids_and_start_empty() {
    let e = engine();
    let a = e.create_session();
    let b = e.create_session();
    assert_ne!(a.id(), b.id());
    assert_eq!(a.tree().preference_count(), 0);
    assert!(a.history().is_empty());
}

#[test]
fn bad_poi_path_fails_creation() {
    let err = Engine::new(EngineConfig::default().with_poi("/nonexistent/spots.tsv")).unwrap_err();
    assert!(matches!(err, EngineError::Poi(_)));
}

#[test]
fn ack_without_pending_chunks_does_nothing() {
    let mut s = engine().create_session();
    let ack = AckEvent {
        session_id: s.id().to_string(),
        kind: AckKind::UserNod,
        timestamp_ms: 10,
    };
    assert!(s.handle_event(EngineEvent::Ack(ack)).unwrap().is_empty());
}

#[test]
fn temple_final_yields_first_query() {
    let mut s = engine().create_session();
    let id = s.id().to_string();
    let actions = s.handle_event(EngineEvent::Asr(AsrEvent::final_(&id, 1, 0, TEMPLE))).unwrap();
    let query = actions
        .iter()
        .find_map(|a| match &a.kind {
            ActionKind::QueryUpdate(q) => Some(q.clone()),
            _ => None,
        })
        .expect("query update");
    assert_eq!(query.major_categories, ["Sightseeing"]);
    assert_eq!(query.subcategories, ["Sightseeing -- Shrines and Temples"]);
    assert_eq!(query.minor_categories, ["Buildings and Historical Sites -- Historical Buildings"]);
    assert_eq!(query.other, ["Kyoto"]);
    assert!(actions.iter().any(|a| matches!(a.kind, ActionKind::Speak { .. })));
    let idx: Vec<u64> = actions.iter().map(|a| a.idx).collect();
    assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
}

#[test]
fn events_for_other_sessions_and_stale_sequences_are_rejected() {
    let mut s = engine().create_session();
    let id = s.id().to_string();
    assert!(matches!(
        s.handle_event(EngineEvent::Asr(AsrEvent::partial("other", 1, 0, "hi"))),
        Err(EngineError::WrongSession { .. })
    ));
    s.handle_event(EngineEvent::Asr(AsrEvent::partial(&id, 2, 0, "hi"))).unwrap();
    assert!(matches!(
        s.handle_event(EngineEvent::Asr(AsrEvent::partial(&id, 2, 10, "hi there"))),
        Err(EngineError::Sequence(_))
    ));
}

#[test]
fn silence_timer_releases_next_chunk() {
    let mut s = engine().create_session();
    let id = s.id().to_string();
    s.handle_event(EngineEvent::Asr(AsrEvent::final_(&id, 1, 1000, TEMPLE))).unwrap();
    let (kind, due) = s.next_timer().expect("awaiting ack");
    assert_eq!(due, 3500);
    // A timer that is not the armed one is ignored.
    assert!(s.handle_event(EngineEvent::Timer { kind, due_ms: 3400 }).unwrap().is_empty());
    let out = s.handle_event(EngineEvent::Timer { kind, due_ms: due }).unwrap();
    assert!(matches!(out[0].kind, ActionKind::Speak { chunk: 2, .. }));
    assert_eq!(s.next_timer(), None);
}

#[test]
fn barge_in_cancels_pending_chunks() {
    let mut s = engine().create_session();
    let id = s.id().to_string();
    s.handle_event(EngineEvent::Asr(AsrEvent::final_(&id, 1, 0, TEMPLE))).unwrap();
    assert_eq!(s.delivery().pending_len(), 1);
    s.handle_event(EngineEvent::Asr(AsrEvent::partial(&id, 2, 500, "wait, actually I"))).unwrap();
    assert_eq!(s.delivery().pending_len(), 0);
    assert_eq!(s.delivery().cancelled_count(), 1);
    assert_eq!(s.next_timer(), None);
}

#[test]
fn stale_voice_proposal_is_dropped() {
    let mut s = engine().create_session();
    let id = s.id().to_string();
    let (_, job1) = s.submit_partial(AsrEvent::partial(&id, 1, 0, "I want,")).unwrap();
    let (forced, job2) = s.submit_partial(AsrEvent::partial(&id, 2, 100, "I want to go,")).unwrap();
    assert!(forced.is_empty());
    assert!(job1.is_cancelled());
    assert!(s.handle_event(job1.run()).unwrap().is_empty());
    let out = s.handle_event(job2.run()).unwrap();
    assert!(matches!(out[0].kind, ActionKind::Nod { seq: 2 }));
    let seqs: Vec<(u64, VoiceActionType)> = s.decisions().iter().map(|d| (d.triggering_sequence, d.action)).collect();
    assert_eq!(seqs, [(1, VoiceActionType::None), (2, VoiceActionType::Nod)]);
}

#[test]
fn table1_replay_matches_golden_log() {
    let mut s = engine().create_session_with_id("replay");
    let report = replay_transcript(&fixture("table1.transcript"), &mut s).unwrap();
    assert!(report.success, "{:?}", report.mismatches);
    assert_eq!(report.matched, 13);
    let golden = std::fs::read_to_string(fixture("table1.golden.log")).unwrap();
    assert_eq!(report.log_text(), golden);
}

#[test]
fn replay_is_deterministic() {
    let run = || {
        let mut s = engine().create_session_with_id("replay");
        replay_transcript(&fixture("table1.transcript"), &mut s).unwrap().log_text()
    };
    assert_eq!(run(), run());
}

#[test]
fn empty_transcript_replays_to_empty_log() {
    let mut s = engine().create_session();
    let report = replay_events(&mut s, &parse_transcript("").unwrap()).unwrap();
    assert!(report.log.is_empty());
    assert!(report.success);
}

/// Backend that fails every call: every module must fall back.
struct Broken;

impl LlmBackend for Broken {
    fn mode(&self) -> BackendMode {
        BackendMode::Live
    }

    fn complete_cancellable(
        &self,
        _template: &PromptTemplate,
        _bindings: &Bindings,
        _cancel: &CancelToken,
    ) -> Result<CompletionResult, BackendError> {
        Err(BackendError::Transport {
            attempts: 3,
            message: "connection refused".into(),
        })
    }
}

#[test]
fn failing_backend_degrades_to_rules() {
    let e = Engine::with_backend(EngineConfig::default(), Arc::new(Broken)).unwrap();
    let mut s = e.create_session_with_id("replay");
    let report = replay_transcript(&fixture("table1.transcript"), &mut s).unwrap();
    let queries = report.queries();
    assert_eq!(queries.len(), 3);
    assert_eq!(queries[2].major_categories, ["Recreation"]);
    assert!(report.log.iter().any(|l| l.contains(" speak ")));
}
