use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AsrEvent, VoiceConfig};
use crate::dialogue_policy::DialogueHistory;
use crate::llm_backend::{BackendError, Bindings, LlmBackend, PromptTemplate};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceActionType {
    Response,
    Nod,
    NodBackchannel,
    None,
}

impl VoiceActionType {
    pub const ALL: [VoiceActionType; 4] = [
        VoiceActionType::Response,
        VoiceActionType::Nod,
        VoiceActionType::NodBackchannel,
        VoiceActionType::None,
    ];

    pub fn label(self) -> &'static str {
        match self {
            VoiceActionType::Response => "response",
            VoiceActionType::Nod => "nod",
            VoiceActionType::NodBackchannel => "nod_backchannel",
            VoiceActionType::None => "none",
        }
    }

    pub fn is_nod_family(self) -> bool {
        matches!(self, VoiceActionType::Nod | VoiceActionType::NodBackchannel)
    }
}

impl fmt::Display for VoiceActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VoiceActionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace(['&', '-', ' '], "_");
        let s = s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_");
        match s.as_str() {
            "response" => Ok(VoiceActionType::Response),
            "nod" => Ok(VoiceActionType::Nod),
            "nod_backchannel" => Ok(VoiceActionType::NodBackchannel),
            "none" => Ok(VoiceActionType::None),
            other => Err(format!("unknown voice action `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoiceActionDecision {
    pub action: VoiceActionType,
    pub triggering_sequence: u64,
    /// Present exactly when `action` is `nod_backchannel`.
    pub backchannel_text: Option<String>,
    pub is_final: bool,
    pub t_ms: u64,
}

impl VoiceActionDecision {
    pub fn none_for(seq: u64, is_final: bool, t_ms: u64) -> Self {
        Self {
            action: VoiceActionType::None,
            triggering_sequence: seq,
            backchannel_text: None,
            is_final,
            t_ms,
        }
    }
}

/// A proposed action before arbitration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub action: VoiceActionType,
    pub backchannel: Option<String>,
}

impl Proposal {
    pub fn none() -> Self {
        Self {
            action: VoiceActionType::None,
            backchannel: None,
        }
    }
}

const QUESTION_OR_EMPHASIS: [char; 4] = ['?', '!', '？', '！'];
const CLAUSE_END: [char; 6] = [',', '、', '，', ';', '.', '。'];
const SENTENCE_END: [char; 6] = ['.', '。', '?', '？', '!', '！'];

/// The offline turn-taking rule.
///
/// Final results take the turn. A partial ending in a question or
/// exclamation mark earns a nod and a backchannel token; one ending at a
/// clause boundary, or carrying enough new words since the last reaction,
/// earns a nod. With early responses enabled, a partial that already ends a
/// sentence takes the turn.
pub fn rule_proposal(partial: &str, is_final: bool, tokens_since_action: usize, config: &VoiceConfig) -> Proposal {
    if is_final {
        return Proposal {
            action: VoiceActionType::Response,
            backchannel: None,
        };
    }
    let trimmed = partial.trim_end();
    let last = trimmed.chars().last();
    let tokens = text::token_count(trimmed);
    if config.early_response && tokens >= config.barge_in_tokens && last.is_some_and(|c| SENTENCE_END.contains(&c)) {
        return Proposal {
            action: VoiceActionType::Response,
            backchannel: None,
        };
    }
    if last.is_some_and(|c| QUESTION_OR_EMPHASIS.contains(&c)) {
        return Proposal {
            action: VoiceActionType::NodBackchannel,
            backchannel: Some(config.backchannel_for(tokens)),
        };
    }
    if last.is_some_and(|c| CLAUSE_END.contains(&c)) || tokens_since_action >= config.nod_token_threshold {
        return Proposal {
            action: VoiceActionType::Nod,
            backchannel: None,
        };
    }
    Proposal::none()
}

/// Stub completion for the voice-action prompt.
pub fn stub_voice_rule(config: VoiceConfig) -> impl Fn(&Bindings) -> String + Send + Sync + 'static {
    move |bindings| {
        let partial = bindings.get("partial").map(String::as_str).unwrap_or("");
        let is_final = bindings.get("is_final").is_some_and(|v| v == "final");
        let since = bindings
            .get("tokens_since_action")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        let p = rule_proposal(partial, is_final, since, &config);
        match p.backchannel {
            Some(bc) => format!("action: {}\nbackchannel: {bc}", p.action),
            None => format!("action: {}", p.action),
        }
    }
}

/// Ask the backend how to react to one ASR update.
///
/// Finals always take the turn without a backend call. A timeout yields
/// `none`; any other failure falls back to the rule.
pub fn propose_voice_action(
    history: &DialogueHistory,
    event: &AsrEvent,
    tokens_since_action: usize,
    backend: &dyn LlmBackend,
    prompt: &PromptTemplate,
    config: &VoiceConfig,
) -> Proposal {
    if event.is_final {
        return rule_proposal(&event.partial_text, true, tokens_since_action, config);
    }
    let mut bindings = Bindings::new();
    bindings.insert("history".into(), history.render());
    bindings.insert("partial".into(), event.partial_text.clone());
    bindings.insert("is_final".into(), "partial".into());
    bindings.insert("tokens_since_action".into(), tokens_since_action.to_string());

    let reply = backend.complete(prompt, &bindings).and_then(|r| {
        let raw = r.first("action").unwrap_or("");
        let action: VoiceActionType = raw.parse().map_err(BackendError::Malformed)?;
        let backchannel = r.first("backchannel").map(str::to_string);
        Ok(Proposal { action, backchannel })
    });
    let mut proposal = match reply {
        Ok(p) => p,
        Err(BackendError::Timeout(_)) | Err(BackendError::Cancelled) => Proposal::none(),
        Err(err) => {
            tracing::warn!(error = %err, seq = event.sequence, "voice action fell back to rule");
            rule_proposal(&event.partial_text, false, tokens_since_action, config)
        }
    };
    if proposal.action == VoiceActionType::Response && !config.early_response {
        proposal = Proposal::none();
    }
    match proposal.action {
        VoiceActionType::NodBackchannel => {
            let bc = proposal
                .backchannel
                .filter(|b| !b.trim().is_empty())
                .unwrap_or_else(|| config.backchannel_for(text::token_count(&event.partial_text)));
            proposal.backchannel = Some(bc);
        }
        _ => proposal.backchannel = None,
    }
    proposal
}
