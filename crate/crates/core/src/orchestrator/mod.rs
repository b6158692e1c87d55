//! Sessions, event handling, the client wire format and transcript replay.

mod action;
mod config;
mod engine;
mod replay;
mod session;
mod transcript;
pub mod wire;

pub use action::{ActionKind, EngineAction, RankedSpot};
pub use config::EngineConfig;
pub use engine::{create_session, stub_backend, Engine, EngineError, Resources};
pub use replay::{replay_events, replay_transcript, ReplayError, ReplayReport};
pub use session::{EngineEvent, Session, SessionSnapshot, TimerKind, TurnRecord, VoiceJob};
pub use transcript::{parse_transcript, Expectation, Transcript, TranscriptEntry, TranscriptError, TranscriptEvent};
