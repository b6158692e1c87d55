//! Uniform access to a chat-completion service plus a deterministic stub.
//!
//! Every engine call site renders a [`PromptTemplate`] with a [`Bindings`]
//! map and hands it to an [`LlmBackend`]. The live backend performs one HTTP
//! round trip (with retries); the stub computes its answer from the template
//! name and the bindings alone, so the whole engine runs offline and
//! reproducibly. Callers own their fallbacks: every error here is
//! recoverable.

mod config;
mod live;
mod stub;
mod template;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

pub use config::{BackendConfig, BackendMode, ConfigError};
pub use live::HttpBackend;
pub use stub::{StubBackend, StubRule};
pub use template::{OutputSchema, PromptSet, PromptTemplate, TemplateError};

/// Placeholder name to value. Ordered, so a binding set has one canonical form.
pub type Bindings = BTreeMap<String, String>;

/// Names of the engine's call sites; each has one prompt file.
pub mod call_site {
    pub const EXTRACT_PREFERENCES: &str = "extract_preferences";
    pub const FILTER_ACCEPTED: &str = "filter_accepted";
    pub const SELECT_DA: &str = "select_da";
    pub const REALIZE_RESPONSE: &str = "realize_response";
    pub const VOICE_ACTION: &str = "voice_action";

    pub const ALL: [&str; 5] = [
        EXTRACT_PREFERENCES,
        FILTER_ACCEPTED,
        SELECT_DA,
        REALIZE_RESPONSE,
        VOICE_ACTION,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    /// Parsed `key: value` lines when the template asks for structured output.
    pub fields: Option<Vec<(String, String)>>,
    pub latency_ms: u64,
    pub mode: BackendMode,
}

impl CompletionResult {
    /// All values recorded under `key`, in reply order.
    pub fn values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fields
            .iter()
            .flatten()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn first<'a>(&'a self, key: &'a str) -> Option<&'a str> {
        self.values(key).next()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("placeholder `{0}` is not bound")]
    UnboundPlaceholder(String),
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed output: {0}")]
    Malformed(String),
    #[error("no stub rule registered for template `{0}`")]
    NoStubRule(String),
    #[error("call cancelled")]
    Cancelled,
}

/// Shared flag used to abandon a call whose result is no longer wanted.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub trait LlmBackend: Send + Sync {
    fn mode(&self) -> BackendMode;

    fn complete_cancellable(
        &self,
        template: &PromptTemplate,
        bindings: &Bindings,
        cancel: &CancelToken,
    ) -> Result<CompletionResult, BackendError>;

    fn complete(
        &self,
        template: &PromptTemplate,
        bindings: &Bindings,
    ) -> Result<CompletionResult, BackendError> {
        self.complete_cancellable(template, bindings, &CancelToken::new())
    }
}

/// Parse `key: value` lines, keeping only the keys the schema names.
///
/// Unknown keys and prose lines are skipped. A reply carrying none of the
/// expected keys, or an expected key with an empty value, is malformed.
pub fn parse_fields(text: &str, expected: &[String]) -> Result<Vec<(String, String)>, BackendError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['-', '*']).trim();
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        if !expected.iter().any(|e| *e == key) {
            continue;
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(BackendError::Malformed(format!("empty value for `{key}`")));
        }
        out.push((key, value.to_string()));
    }
    if out.is_empty() {
        return Err(BackendError::Malformed(format!(
            "none of the expected fields ({}) present",
            expected.join(", ")
        )));
    }
    Ok(out)
}

pub(crate) fn finish(
    template: &PromptTemplate,
    text: String,
    latency_ms: u64,
    mode: BackendMode,
) -> Result<CompletionResult, BackendError> {
    let fields = match &template.schema {
        OutputSchema::FreeText => {
            if text.trim().is_empty() {
                return Err(BackendError::Malformed("empty completion".into()));
            }
            None
        }
        OutputSchema::Fields(expected) => Some(parse_fields(&text, expected)?),
    };
    Ok(CompletionResult {
        text,
        fields,
        latency_ms,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_parsed_tolerantly() {
        let expected = vec!["preference".to_string()];
        let reply = "Sure! Here you go:\npreference: major_category = Sightseeing\nnote: ignored\n- preference: other = Kyoto";
        let parsed = parse_fields(reply, &expected).unwrap();
        assert_eq!(
            parsed,
            vec![
                ("preference".to_string(), "major_category = Sightseeing".to_string()),
                ("preference".to_string(), "other = Kyoto".to_string()),
            ]
        );
    }

    #[test]
    fn missing_fields_are_malformed() {
        let expected = vec!["choice".to_string()];
        assert!(matches!(
            parse_fields("I think the second one", &expected),
            Err(BackendError::Malformed(_))
        ));
        assert!(matches!(
            parse_fields("choice:", &expected),
            Err(BackendError::Malformed(_))
        ));
    }
}

#[cfg(test)]
pub(crate) fn finish_for_tests(template: &PromptTemplate, text: &str) -> Result<CompletionResult, BackendError> {
    finish(template, text.to_string(), 0, BackendMode::Live)
}
