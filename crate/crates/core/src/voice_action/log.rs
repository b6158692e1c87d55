use super::VoiceActionDecision;

/// `seq <n> <partial|final> action=<label> [bc="<token>"] t=<ms>`
pub fn format_decision(d: &VoiceActionDecision) -> String {
    let kind = if d.is_final { "final" } else { "partial" };
    match &d.backchannel_text {
        Some(bc) => format!(
            "seq {} {kind} action={} bc=\"{}\" t={}",
            d.triggering_sequence, d.action, bc, d.t_ms
        ),
        None => format!("seq {} {kind} action={} t={}", d.triggering_sequence, d.action, d.t_ms),
    }
}
