use super::{VoiceActionDecision, VoiceActionType};

/// Rate-limit nods: a nod-family action within `window_ms` of the last
/// non-`none` action becomes `none`. Responses pass untouched.
pub fn arbitrate(
    decision: VoiceActionDecision,
    recent: &[VoiceActionDecision],
    now_ms: u64,
    window_ms: u64,
) -> VoiceActionDecision {
    if !decision.action.is_nod_family() {
        return decision;
    }
    let too_soon = recent
        .iter()
        .rev()
        .find(|d| d.action != VoiceActionType::None)
        .is_some_and(|last| now_ms.saturating_sub(last.t_ms) < window_ms);
    if too_soon {
        VoiceActionDecision {
            action: VoiceActionType::None,
            backchannel_text: None,
            ..decision
        }
    } else {
        decision
    }
}
