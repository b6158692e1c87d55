use std::sync::OnceLock;

use regex::Regex;

use super::{DialogueAct, DialogueActType, DialogueHistory, PolicyError};
use crate::llm_backend::{BackendError, Bindings, LlmBackend, PromptTemplate};

/// Fixed preference order for offline selection, most preferred first.
pub const STUB_PRIORITY: [DialogueActType; 9] = [
    DialogueActType::Farewell,
    DialogueActType::ConfirmPreference,
    DialogueActType::ProposeSpot,
    DialogueActType::InformDescription,
    DialogueActType::InformHours,
    DialogueActType::InformFee,
    DialogueActType::AskPreference,
    DialogueActType::AskNextStep,
    DialogueActType::Acknowledge,
];

fn priority(act_type: DialogueActType) -> usize {
    STUB_PRIORITY.iter().position(|t| *t == act_type).expect("every act type is ranked")
}

/// Sort key: acts not yet said first, then type priority, then spot rank.
fn stub_key(act_type: DialogueActType, rank: Option<usize>, said: bool) -> (bool, usize, usize) {
    (said, priority(act_type), rank.unwrap_or(0))
}

fn already_said(act: &DialogueAct, history: &DialogueHistory) -> bool {
    history.system_acts().any(|a| a.same_utterance_as(act))
}

/// Index of the act the fixed priority order picks.
pub fn stub_choice(candidates: &[DialogueAct], history: &DialogueHistory) -> Option<usize> {
    candidates
        .iter()
        .enumerate()
        .min_by_key(|(i, a)| (stub_key(a.act_type, a.spot_rank, already_said(a, history)), *i))
        .map(|(i, _)| i)
}

/// Numbered candidate listing shown to the model.
pub fn render_candidates(candidates: &[DialogueAct], history: &DialogueHistory) -> String {
    candidates
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let rank = a.spot_rank.map_or("-".to_string(), |r| r.to_string());
            let said = if already_said(a, history) { "yes" } else { "no" };
            format!("{}. {} rank={rank} said={said} | {}", i + 1, a.act_type, a.summary())
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn listing_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d+)\. ([a-z_]+) rank=(\d+|-) said=(yes|no)").expect("valid regex"))
}

/// Stub completion for the selection prompt: re-reads the numbered listing
/// and applies the fixed priority order.
pub fn stub_select_rule(bindings: &Bindings) -> String {
    let listing = bindings.get("candidates").map(String::as_str).unwrap_or("");
    let best = listing
        .lines()
        .filter_map(|line| {
            let caps = listing_line().captures(line.trim())?;
            let n: usize = caps[1].parse().ok()?;
            let act_type: DialogueActType = caps[2].parse().ok()?;
            let rank = caps[3].parse().ok();
            Some((stub_key(act_type, rank, &caps[4] == "yes"), n))
        })
        .min();
    match best {
        Some((_, n)) => format!("choice: {n}"),
        None => "choice: none".to_string(),
    }
}

/// Pick one candidate. Whatever the backend answers, the result is a member
/// of `candidates`; anything else falls back to the priority order.
pub fn select_da<'a>(
    candidates: &'a [DialogueAct],
    user_utterance: &str,
    history: &DialogueHistory,
    backend: &dyn LlmBackend,
    prompt: &PromptTemplate,
) -> Result<&'a DialogueAct, PolicyError> {
    if candidates.is_empty() {
        return Err(PolicyError::NoCandidates);
    }
    let mut bindings = Bindings::new();
    bindings.insert("utterance".into(), user_utterance.to_string());
    bindings.insert("history".into(), history.render());
    bindings.insert("candidates".into(), render_candidates(candidates, history));

    let chosen = backend.complete(prompt, &bindings).and_then(|reply| {
        let raw = reply.first("choice").unwrap_or("");
        let n: usize = raw
            .trim()
            .trim_end_matches('.')
            .parse()
            .map_err(|_| BackendError::Malformed(format!("choice `{raw}` is not a number")))?;
        if n == 0 || n > candidates.len() {
            return Err(BackendError::Malformed(format!("choice {n} is not a candidate")));
        }
        Ok(n - 1)
    });
    let idx = chosen.unwrap_or_else(|err| {
        tracing::warn!(error = %err, "dialogue act selection fell back to priority order");
        stub_choice(candidates, history).expect("candidates are non-empty")
    });
    Ok(&candidates[idx])
}
