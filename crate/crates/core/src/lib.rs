//! Incremental dialogue orchestration for a sightseeing-guide robot.
//!
//! ASR updates flow into two paths: every update gets a voice-action
//! decision (respond, nod, nod with a backchannel, or nothing), and final
//! results drive preference grounding, spot search and dialogue-act
//! selection. Responses are spoken chunk by chunk, paced by the user's
//! acknowledgments.

pub mod common_ground;
pub mod dialogue_policy;
pub mod expression_motion;
pub mod llm_backend;
pub mod spot_search;
pub mod text;
pub mod voice_action;
pub mod orchestrator;
