use std::collections::VecDeque;

use serde::Serialize;

use super::{AckEvent, AsrEvent};
use crate::text;

/// Progress of one chunked system response.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DeliveryState {
    pending_chunks: VecDeque<String>,
    delivered_count: usize,
    cancelled_count: usize,
    started_count: usize,
}

impl DeliveryState {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn pending_chunks(&self) -> impl Iterator<Item = &str> {
        self.pending_chunks.iter().map(String::as_str)
    }

    pub fn pending_len(&self) -> usize {
        self.pending_chunks.len()
    }

    pub fn delivered_count(&self) -> usize {
        self.delivered_count
    }

    pub fn cancelled_count(&self) -> usize {
        self.cancelled_count
    }

    pub fn started_count(&self) -> usize {
        self.started_count
    }

    /// Waiting for the user to take in the last chunk before the next one.
    pub fn awaiting_ack(&self) -> bool {
        self.delivered_count >= 1 && !self.pending_chunks.is_empty()
    }

    pub fn is_active(&self) -> bool {
        !self.pending_chunks.is_empty()
    }

    fn release(&mut self) -> Option<String> {
        let next = self.pending_chunks.pop_front()?;
        self.delivered_count += 1;
        Some(next)
    }

    /// Drop every chunk not yet spoken; returns how many were dropped.
    pub fn cancel_pending(&mut self) -> usize {
        let n = self.pending_chunks.len();
        self.pending_chunks.clear();
        self.cancelled_count += n;
        n
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.delivered_count + self.cancelled_count + self.pending_chunks.len() != self.started_count {
            return Err(format!(
                "delivered {} + cancelled {} + pending {} != started {}",
                self.delivered_count,
                self.cancelled_count,
                self.pending_chunks.len(),
                self.started_count
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot deliver an empty response")]
pub struct EmptyDelivery;

/// Begin a new response. Chunk 1 is returned for immediate output. A
/// previous response still in flight has its remainder cancelled; the
/// counters carry over so conservation holds across a session.
pub fn start_delivery(state: &mut DeliveryState, chunks: Vec<String>) -> Result<String, EmptyDelivery> {
    if chunks.is_empty() {
        return Err(EmptyDelivery);
    }
    state.cancel_pending();
    state.started_count += chunks.len();
    state.pending_chunks.extend(chunks);
    Ok(state.release().expect("non-empty"))
}

/// Any acknowledgment releases exactly the next chunk. With nothing
/// pending the ack is ignored.
pub fn on_ack(state: &mut DeliveryState, _ack: &AckEvent) -> Option<String> {
    state.release()
}

/// A user partial of at least `min_tokens` tokens during delivery cancels
/// what is left. Returns the number of chunks cancelled.
pub fn on_barge_in(state: &mut DeliveryState, event: &AsrEvent, min_tokens: usize) -> usize {
    if !state.is_active() || text::token_count(&event.partial_text) < min_tokens {
        return 0;
    }
    state.cancel_pending()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voice_action::AckKind;

    fn ack(kind: AckKind) -> AckEvent {
        AckEvent {
            session_id: "s".into(),
            kind,
            timestamp_ms: 0,
        }
    }

    fn chunks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn nod_releases_second_chunk() {
        let mut st = DeliveryState::idle();
        let first = start_delivery(&mut st, chunks(&["Alright then,", "With beautiful autumn leaves,"])).unwrap();
        assert_eq!(first, "Alright then,");
        assert!(st.awaiting_ack());
        assert_eq!(on_ack(&mut st, &ack(AckKind::UserNod)).as_deref(), Some("With beautiful autumn leaves,"));
        assert!(!st.awaiting_ack());
        assert_eq!(st.delivered_count(), 2);
    }

    #[test]
    fn single_chunk_needs_no_ack() {
        let mut st = DeliveryState::idle();
        start_delivery(&mut st, chunks(&["Alright then,"])).unwrap();
        assert!(!st.awaiting_ack());
        assert_eq!(on_ack(&mut st, &ack(AckKind::SilenceTimeout)), None);
        assert_eq!(st.delivered_count(), 1);
    }

    #[test]
    fn barge_in_cancels_remaining_chunks() {
        let mut st = DeliveryState::idle();
        start_delivery(&mut st, chunks(&["a,", "b,", "c."])).unwrap();
        let ev = AsrEvent::partial("s", 1, 10, "wait a moment");
        assert_eq!(on_barge_in(&mut st, &ev, 3), 2);
        assert_eq!(st.pending_len(), 0);
        assert!(!st.awaiting_ack());
        st.check_invariants().unwrap();
    }

    #[test]
    fn short_partial_is_not_a_barge_in() {
        let mut st = DeliveryState::idle();
        start_delivery(&mut st, chunks(&["a,", "b."])).unwrap();
        assert_eq!(on_barge_in(&mut st, &AsrEvent::partial("s", 1, 10, "uh huh"), 3), 0);
        assert_eq!(st.pending_len(), 1);
    }

    #[test]
    fn new_delivery_cancels_old_remainder() {
        let mut st = DeliveryState::idle();
        start_delivery(&mut st, chunks(&["a,", "b,", "c."])).unwrap();
        start_delivery(&mut st, chunks(&["d."])).unwrap();
        assert_eq!(st.started_count(), 4);
        assert_eq!(st.cancelled_count(), 2);
        assert_eq!(st.delivered_count(), 2);
        st.check_invariants().unwrap();
    }

    #[test]
    fn empty_delivery_rejected() {
        assert_eq!(start_delivery(&mut DeliveryState::idle(), vec![]), Err(EmptyDelivery));
    }
}
