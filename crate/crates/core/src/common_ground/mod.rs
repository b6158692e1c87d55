//! Common ground: which user preferences the system has taken up, grouped by
//! topic.
//!
//! A turn runs extract → (response generation) → filter → record. Extraction
//! and acceptance go through the LLM backend and fall back to keyword rules
//! over the [`Lexicon`] whenever the backend fails or answers outside the
//! allowed vocabulary.

mod lexicon;
mod preference;
mod tree;

use std::sync::Arc;

pub use lexicon::{Lexicon, LexiconEntry, LexiconError, TermMatch};
pub use preference::{EmptyPreference, Preference, PreferenceStatus};
pub use tree::{active_preferences, record_preferences, CommonGroundTree, RecordOutcome, TopicNode, GENERAL_KEY, ROOT_KEY};

use crate::dialogue_policy::DialogueHistory;
use crate::llm_backend::{call_site, BackendError, Bindings, CompletionResult, LlmBackend, PromptSet, PromptTemplate};
use crate::spot_search::Facet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroundingError {
    #[error("utterance is empty")]
    EmptyUtterance,
    #[error("candidate `{0}` is not in extracted state")]
    NotExtracted(String),
    #[error("preference `{0}` has not been accepted")]
    NotAccepted(String),
}

/// Keyword extraction: every lexicon term in the utterance contributes its
/// labels, in mention order, without repeats.
pub fn extract_by_rules(lexicon: &Lexicon, utterance: &str, turn: usize) -> Vec<Preference> {
    let mut out: Vec<Preference> = Vec::new();
    for m in lexicon.find_terms(utterance) {
        for (facet, label) in &m.entry.labels {
            let pref = Preference::extracted(*facet, label, turn).expect("lexicon labels are non-empty");
            if !out.iter().any(|p| p.same_as(&pref)) {
                out.push(pref);
            }
        }
    }
    out
}

/// Substring/synonym acceptance: a candidate is accepted when the response
/// mentions its value or any lexicon surface form implying it.
pub fn accept_by_rules(lexicon: &Lexicon, response: &str, candidates: &[Preference]) -> Vec<Preference> {
    candidates
        .iter()
        .filter(|c| lexicon.mentions(response, c.facet(), c.value()))
        .map(|c| c.clone().accepted())
        .collect()
}

fn render_candidates(candidates: &[Preference]) -> String {
    candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("\n")
}

fn parse_pair(raw: &str) -> Option<(Facet, String)> {
    let (facet, value) = raw.split_once('=')?;
    let facet = facet.trim().parse().ok()?;
    let value = crate::text::normalize(value.trim().trim_matches('"'));
    (!value.is_empty()).then_some((facet, value))
}

/// Stub completion for the extraction prompt.
pub fn stub_extract_rule(lexicon: Arc<Lexicon>) -> impl Fn(&Bindings) -> String + Send + Sync + 'static {
    move |bindings| {
        let utterance = bindings.get("utterance").map(String::as_str).unwrap_or("");
        let prefs = extract_by_rules(&lexicon, utterance, 0);
        if prefs.is_empty() {
            return "preference: none".to_string();
        }
        prefs
            .iter()
            .map(|p| format!("preference: {p}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Stub completion for the acceptance prompt.
pub fn stub_filter_rule(lexicon: Arc<Lexicon>) -> impl Fn(&Bindings) -> String + Send + Sync + 'static {
    move |bindings| {
        let response = bindings.get("response").map(String::as_str).unwrap_or("");
        let accepted: Vec<String> = bindings
            .get("candidates")
            .map(String::as_str)
            .unwrap_or("")
            .lines()
            .filter_map(parse_pair)
            .filter(|(facet, value)| lexicon.mentions(response, *facet, value))
            .map(|(facet, value)| format!("accepted: {facet} = {value}"))
            .collect();
        if accepted.is_empty() {
            "accepted: none".to_string()
        } else {
            accepted.join("\n")
        }
    }
}

/// Runs the extraction and acceptance call sites with rule fallbacks.
#[derive(Debug, Clone)]
pub struct Grounder {
    lexicon: Arc<Lexicon>,
    extract_prompt: PromptTemplate,
    filter_prompt: PromptTemplate,
}

impl Grounder {
    pub fn new(lexicon: Arc<Lexicon>, prompts: &PromptSet) -> Self {
        Self {
            lexicon,
            extract_prompt: prompts.get(call_site::EXTRACT_PREFERENCES).clone(),
            filter_prompt: prompts.get(call_site::FILTER_ACCEPTED).clone(),
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Candidate preferences in a finalized user utterance.
    pub fn extract_preferences(
        &self,
        utterance: &str,
        turn: usize,
        history: &DialogueHistory,
        backend: &dyn LlmBackend,
    ) -> Result<Vec<Preference>, GroundingError> {
        if utterance.trim().is_empty() {
            return Err(GroundingError::EmptyUtterance);
        }
        let mut bindings = Bindings::new();
        bindings.insert("utterance".into(), utterance.to_string());
        bindings.insert("history".into(), history.render());
        bindings.insert("taxonomy".into(), self.lexicon.taxonomy().describe());
        let parsed = backend
            .complete(&self.extract_prompt, &bindings)
            .and_then(|reply| self.parse_extraction(&reply, turn));
        Ok(parsed.unwrap_or_else(|err| {
            tracing::warn!(error = %err, "preference extraction fell back to keyword rules");
            extract_by_rules(&self.lexicon, utterance, turn)
        }))
    }

    fn parse_extraction(&self, reply: &CompletionResult, turn: usize) -> Result<Vec<Preference>, BackendError> {
        let mut out: Vec<Preference> = Vec::new();
        for raw in reply.values("preference") {
            if raw.eq_ignore_ascii_case("none") {
                continue;
            }
            let (facet, value) = parse_pair(raw).ok_or_else(|| BackendError::Malformed(format!("bad preference `{raw}`")))?;
            let canonical = self
                .lexicon
                .taxonomy()
                .canonical(facet, &value)
                .ok_or_else(|| BackendError::Malformed(format!("unknown {facet} label `{value}`")))?;
            let pref = Preference::extracted(facet, &canonical, turn).map_err(|e| BackendError::Malformed(e.to_string()))?;
            if !out.iter().any(|p| p.same_as(&pref)) {
                out.push(pref);
            }
        }
        Ok(out)
    }

    /// The subset of `candidates` the system response has taken up.
    pub fn filter_accepted(
        &self,
        system_response: &str,
        candidates: &[Preference],
        backend: &dyn LlmBackend,
    ) -> Result<Vec<Preference>, GroundingError> {
        if let Some(c) = candidates.iter().find(|c| c.status() != PreferenceStatus::Extracted) {
            return Err(GroundingError::NotExtracted(c.to_string()));
        }
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let mut bindings = Bindings::new();
        bindings.insert("response".into(), system_response.to_string());
        bindings.insert("candidates".into(), render_candidates(candidates));
        let parsed = backend
            .complete(&self.filter_prompt, &bindings)
            .and_then(|reply| parse_acceptance(&reply, candidates));
        Ok(parsed.unwrap_or_else(|err| {
            tracing::warn!(error = %err, "acceptance filter fell back to synonym rules");
            accept_by_rules(&self.lexicon, system_response, candidates)
        }))
    }
}

/// Map reply lines back onto candidates. Naming anything that is not a
/// candidate invalidates the whole reply.
fn parse_acceptance(reply: &CompletionResult, candidates: &[Preference]) -> Result<Vec<Preference>, BackendError> {
    let mut chosen = vec![false; candidates.len()];
    for raw in reply.values("accepted") {
        if raw.eq_ignore_ascii_case("none") {
            continue;
        }
        let (facet, value) = parse_pair(raw).ok_or_else(|| BackendError::Malformed(format!("bad acceptance `{raw}`")))?;
        let idx = candidates
            .iter()
            .position(|c| c.facet() == facet && c.value().eq_ignore_ascii_case(&value))
            .ok_or_else(|| BackendError::Malformed(format!("`{raw}` is not a candidate")))?;
        chosen[idx] = true;
    }
    Ok(candidates
        .iter()
        .zip(chosen)
        .filter(|(_, keep)| *keep)
        .map(|(c, _)| c.clone().accepted())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm_backend::{StubBackend, BackendMode, CancelToken};

    const TEMPLE: &str =
        "Yes, I want to visit a temple where I can see beautiful autumn leaves and have a panoramic view of Kyoto.";

    fn grounder() -> (Grounder, StubBackend) {
        let lexicon = Arc::new(Lexicon::builtin());
        let stub = StubBackend::new()
            .with_rule(call_site::EXTRACT_PREFERENCES, stub_extract_rule(lexicon.clone()))
            .with_rule(call_site::FILTER_ACCEPTED, stub_filter_rule(lexicon.clone()));
        (Grounder::new(lexicon, &PromptSet::builtin()), stub)
    }

    struct Failing;
    impl LlmBackend for Failing {
        fn mode(&self) -> BackendMode {
            BackendMode::Live
        }
        fn complete_cancellable(&self, _: &PromptTemplate, _: &Bindings, _: &CancelToken) -> Result<CompletionResult, BackendError> {
            Err(BackendError::Timeout(10))
        }
    }

    struct Canned(&'static str);
    impl LlmBackend for Canned {
        fn mode(&self) -> BackendMode {
            BackendMode::Live
        }
        fn complete_cancellable(&self, t: &PromptTemplate, _: &Bindings, _: &CancelToken) -> Result<CompletionResult, BackendError> {
            crate::llm_backend::finish_for_tests(t, self.0)
        }
    }

    fn pairs(prefs: &[Preference]) -> Vec<(Facet, &str)> {
        prefs.iter().map(|p| (p.facet(), p.value())).collect()
    }

    #[test]
    fn temple_utterance_yields_table_one_facets() {
        let (g, stub) = grounder();
        let prefs = g.extract_preferences(TEMPLE, 0, &DialogueHistory::new(), &stub).unwrap();
        assert_eq!(
            pairs(&prefs),
            vec![
                (Facet::MajorCategory, "Sightseeing"),
                (Facet::Subcategory, "Sightseeing -- Shrines and Temples"),
                (Facet::MinorCategory, "Buildings and Historical Sites -- Historical Buildings"),
                (Facet::Other, "Kyoto"),
            ]
        );
        assert!(prefs.iter().all(|p| p.status() == PreferenceStatus::Extracted));
    }

    #[test]
    fn amusement_park_utterance() {
        let (g, stub) = grounder();
        let prefs = g
            .extract_preferences("please also tell me about amusement parks", 3, &DialogueHistory::new(), &stub)
            .unwrap();
        assert_eq!(
            pairs(&prefs),
            vec![(Facet::MajorCategory, "Recreation"), (Facet::Subcategory, "Recreation -- Theme Park")]
        );
        assert!(prefs.iter().all(|p| p.source_turn() == 3));
    }

    #[test]
    fn greeting_and_empty_utterances() {
        let (g, stub) = grounder();
        let h = DialogueHistory::new();
        assert!(g.extract_preferences("Hello", 0, &h, &stub).unwrap().is_empty());
        assert_eq!(g.extract_preferences("  ", 0, &h, &stub), Err(GroundingError::EmptyUtterance));
    }

    #[test]
    fn backend_failure_falls_back_to_keywords() {
        let (g, stub) = grounder();
        let h = DialogueHistory::new();
        let via_stub = g.extract_preferences(TEMPLE, 0, &h, &stub).unwrap();
        let via_fallback = g.extract_preferences(TEMPLE, 0, &h, &Failing).unwrap();
        assert_eq!(via_stub, via_fallback);
    }

    #[test]
    fn invented_labels_trigger_fallback() {
        let (g, _) = grounder();
        let reply = Canned("preference: major_category = Volcano Tours");
        let prefs = g.extract_preferences("I like temples", 0, &DialogueHistory::new(), &reply).unwrap();
        assert_eq!(prefs.len(), 3);
    }

    #[test]
    fn amusement_park_response_accepts_both() {
        let (g, stub) = grounder();
        let cands = extract_by_rules(g.lexicon(), "amusement parks", 4);
        let acc = g
            .filter_accepted("Alright, I will try to search for amusement parks for you.", &cands, &stub)
            .unwrap();
        assert_eq!(acc.len(), 2);
        assert!(acc.iter().all(Preference::is_accepted));
    }

    #[test]
    fn empty_candidates_accept_nothing() {
        let (g, stub) = grounder();
        assert!(g.filter_accepted("anything", &[], &stub).unwrap().is_empty());
    }

    #[test]
    fn rule_fallback_drops_unmentioned_kyoto() {
        // Frozen by running the rule fallback on this fixture pair.
        let (g, _) = grounder();
        let cands = vec![
            Preference::extracted(Facet::Subcategory, "Sightseeing -- Shrines and Temples", 0).unwrap(),
            Preference::extracted(Facet::Other, "Kyoto", 0).unwrap(),
        ];
        let acc = g
            .filter_accepted("There are many lovely temples to choose from.", &cands, &Failing)
            .unwrap();
        assert_eq!(pairs(&acc), vec![(Facet::Subcategory, "Sightseeing -- Shrines and Temples")]);
    }

    #[test]
    fn non_candidate_acceptance_is_rejected_wholesale() {
        let (g, _) = grounder();
        let cands = vec![Preference::extracted(Facet::Other, "Kyoto", 0).unwrap()];
        let reply = Canned("accepted: other = Kyoto\naccepted: other = Paris");
        // Falls back to rules; the response does not mention Kyoto.
        let acc = g.filter_accepted("Sounds good.", &cands, &reply).unwrap();
        assert!(acc.is_empty());
    }

    #[test]
    fn accepted_candidates_are_rejected_as_input() {
        let (g, stub) = grounder();
        let already = Preference::extracted(Facet::Other, "Kyoto", 0).unwrap().accepted();
        assert!(matches!(
            g.filter_accepted("Kyoto", &[already], &stub),
            Err(GroundingError::NotExtracted(_))
        ));
    }
}
