use super::{arbitrate, AsrEvent, Proposal, VoiceActionDecision, VoiceActionType, VoiceConfig};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("sequence {got} is not after {last}")]
    NotIncreasing { last: u64, got: u64 },
    #[error("timestamp {got} ms is before {last} ms")]
    TimeWentBackwards { last: u64, got: u64 },
}

/// An ASR update waiting for its decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingDecision {
    pub sequence: u64,
    pub is_final: bool,
    pub t_ms: u64,
    pub tokens: usize,
    pub tokens_since_action: usize,
}

/// Guarantees exactly one arbitrated decision per ASR event, in sequence
/// order.
///
/// Each event opens a pending slot. The slot is closed either by
/// [`resolve`](Self::resolve) with the backend's proposal, or by the next
/// event, which closes it as `none`. Proposals for anything but the open
/// slot are stale and dropped.
#[derive(Debug, Clone)]
pub struct DecisionTracker {
    config: VoiceConfig,
    last_seq: Option<u64>,
    last_t: u64,
    pending: Option<PendingDecision>,
    tokens_at_last_action: usize,
    recent: Vec<VoiceActionDecision>,
}

const RECENT_KEEP: usize = 32;

impl DecisionTracker {
    pub fn new(config: VoiceConfig) -> Self {
        Self {
            config,
            last_seq: None,
            last_t: 0,
            pending: None,
            tokens_at_last_action: 0,
            recent: Vec::new(),
        }
    }

    pub fn config(&self) -> &VoiceConfig {
        &self.config
    }

    pub fn recent(&self) -> &[VoiceActionDecision] {
        &self.recent
    }

    pub fn pending(&self) -> Option<&PendingDecision> {
        self.pending.as_ref()
    }

    pub fn last_sequence(&self) -> Option<u64> {
        self.last_seq
    }

    /// Check ordering without changing anything.
    pub fn check(&self, event: &AsrEvent) -> Result<(), SequenceError> {
        if let Some(last) = self.last_seq {
            if event.sequence <= last {
                return Err(SequenceError::NotIncreasing {
                    last,
                    got: event.sequence,
                });
            }
        }
        if event.timestamp_ms < self.last_t {
            return Err(SequenceError::TimeWentBackwards {
                last: self.last_t,
                got: event.timestamp_ms,
            });
        }
        Ok(())
    }

    /// Register `event`. Returns the forced `none` for a still-open earlier
    /// slot, if any, and the new pending slot.
    pub fn open(&mut self, event: &AsrEvent) -> Result<(Option<VoiceActionDecision>, PendingDecision), SequenceError> {
        self.check(event)?;
        let superseded = self.close_pending();
        self.last_seq = Some(event.sequence);
        self.last_t = event.timestamp_ms;
        let tokens = text::token_count(&event.partial_text);
        let pending = PendingDecision {
            sequence: event.sequence,
            is_final: event.is_final,
            t_ms: event.timestamp_ms,
            tokens,
            tokens_since_action: tokens.saturating_sub(self.tokens_at_last_action),
        };
        self.pending = Some(pending.clone());
        Ok((superseded, pending))
    }

    /// Close the open slot as `none` (its answer never arrived).
    pub fn close_pending(&mut self) -> Option<VoiceActionDecision> {
        let p = self.pending.take()?;
        let decision = VoiceActionDecision::none_for(p.sequence, p.is_final, p.t_ms);
        if p.is_final {
            self.tokens_at_last_action = 0;
        }
        self.push(decision.clone());
        Some(decision)
    }

    /// Apply a proposal for `sequence`; `None` if that slot is no longer open.
    pub fn resolve(&mut self, sequence: u64, proposal: Proposal) -> Option<VoiceActionDecision> {
        if self.pending.as_ref().map(|p| p.sequence) != Some(sequence) {
            return None;
        }
        let p = self.pending.take().expect("checked above");
        let backchannel_text = match proposal.action {
            VoiceActionType::NodBackchannel => Some(
                proposal
                    .backchannel
                    .unwrap_or_else(|| self.config.backchannel_for(p.tokens)),
            ),
            _ => None,
        };
        let proposed = VoiceActionDecision {
            action: proposal.action,
            triggering_sequence: p.sequence,
            backchannel_text,
            is_final: p.is_final,
            t_ms: p.t_ms,
        };
        let decision = arbitrate(proposed, &self.recent, p.t_ms, self.config.nod_window_ms);
        if p.is_final {
            self.tokens_at_last_action = 0;
        } else if decision.action != VoiceActionType::None {
            self.tokens_at_last_action = p.tokens;
        }
        self.push(decision.clone());
        Some(decision)
    }

    fn push(&mut self, decision: VoiceActionDecision) {
        self.recent.push(decision);
        if self.recent.len() > RECENT_KEEP {
            self.recent.remove(0);
        }
    }
}
