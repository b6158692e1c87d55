//! Per-update turn-taking: decide how to react to every ASR update, keep
//! nods from piling up, and pace chunked responses against the user's
//! acknowledgments.

mod arbitrate;
mod decide;
mod delivery;
mod event;
mod log;
mod tracker;

use serde::{Deserialize, Serialize};

pub use arbitrate::arbitrate;
pub use decide::{propose_voice_action, rule_proposal, stub_voice_rule, Proposal, VoiceActionDecision, VoiceActionType};
pub use delivery::{on_ack, on_barge_in, start_delivery, DeliveryState, EmptyDelivery};
pub use event::{AckEvent, AckKind, AsrEvent};
pub use log::format_decision;
pub use tracker::{DecisionTracker, PendingDecision, SequenceError};

const BUILTIN_BACKCHANNELS: &str = include_str!("../../resources/backchannels.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoiceConfig {
    /// Minimum gap between two nod-family actions.
    pub nod_window_ms: u64,
    /// An unacknowledged chunk is followed up after this long.
    pub silence_timeout_ms: u64,
    /// New tokens since the last reaction that earn a nod without punctuation.
    pub nod_token_threshold: usize,
    /// Minimum partial length that interrupts a delivery.
    pub barge_in_tokens: usize,
    pub backchannel_tokens: Vec<String>,
    /// Allow `response` before the final ASR result.
    pub early_response: bool,
}

impl Default for VoiceConfig {
    fn default() -> Self {
        Self {
            nod_window_ms: 1500,
            silence_timeout_ms: 2500,
            nod_token_threshold: 8,
            barge_in_tokens: 3,
            backchannel_tokens: BUILTIN_BACKCHANNELS
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
            early_response: false,
        }
    }
}

impl VoiceConfig {
    /// Deterministic pick from the backchannel list.
    pub fn backchannel_for(&self, n: usize) -> String {
        if self.backchannel_tokens.is_empty() {
            return "uh-huh".to_string();
        }
        self.backchannel_tokens[n % self.backchannel_tokens.len()].clone()
    }
}

/// Decide, arbitrate and record in one step, for callers without
/// concurrency (replay, tests).
pub fn select_voice_action(
    tracker: &mut DecisionTracker,
    history: &crate::dialogue_policy::DialogueHistory,
    event: &AsrEvent,
    backend: &dyn crate::llm_backend::LlmBackend,
    prompt: &crate::llm_backend::PromptTemplate,
) -> Result<Vec<VoiceActionDecision>, SequenceError> {
    let (superseded, pending) = tracker.open(event)?;
    let proposal = propose_voice_action(history, event, pending.tokens_since_action, backend, prompt, tracker.config());
    let mut out: Vec<_> = superseded.into_iter().collect();
    out.extend(tracker.resolve(pending.sequence, proposal));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_examples() {
        let c = VoiceConfig::default();
        assert_eq!(
            rule_proposal("Yes, I want to visit a temple where I can see beautiful autumn leaves,", false, 0, &c).action,
            VoiceActionType::Nod
        );
        assert_eq!(rule_proposal("anything", true, 0, &c).action, VoiceActionType::Response);
        let q = rule_proposal("is it open on Monday?", false, 0, &c);
        assert_eq!(q.action, VoiceActionType::NodBackchannel);
        assert!(c.backchannel_tokens.contains(q.backchannel.as_ref().unwrap()));
        assert_eq!(rule_proposal("I want", false, 2, &c).action, VoiceActionType::None);
        assert_eq!(rule_proposal("a b c d e f g h", false, 8, &c).action, VoiceActionType::Nod);
    }

    #[test]
    fn early_response_only_when_enabled() {
        let mut c = VoiceConfig::default();
        assert_eq!(rule_proposal("I want to go there.", false, 0, &c).action, VoiceActionType::Nod);
        c.early_response = true;
        assert_eq!(rule_proposal("I want to go there.", false, 0, &c).action, VoiceActionType::Response);
    }
}
