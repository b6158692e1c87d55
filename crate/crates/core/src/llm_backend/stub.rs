use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{finish, BackendError, BackendMode, Bindings, CancelToken, CompletionResult, LlmBackend, PromptTemplate};

/// Computes a completion from the bindings of one call site.
pub type StubRule = Arc<dyn Fn(&Bindings) -> String + Send + Sync>;

/// Offline backend. Each template name maps to a pure rule over the
/// bindings; no network access ever happens here.
#[derive(Clone, Default)]
pub struct StubBackend {
    rules: BTreeMap<String, StubRule>,
}

impl fmt::Debug for StubBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StubBackend")
            .field("rules", &self.rules.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl StubBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rule<F>(mut self, template: &str, rule: F) -> Self
    where
        F: Fn(&Bindings) -> String + Send + Sync + 'static,
    {
        self.rules.insert(template.to_string(), Arc::new(rule));
        self
    }
}

impl LlmBackend for StubBackend {
    fn mode(&self) -> BackendMode {
        BackendMode::Stub
    }

    fn complete_cancellable(
        &self,
        template: &PromptTemplate,
        bindings: &Bindings,
        cancel: &CancelToken,
    ) -> Result<CompletionResult, BackendError> {
        // Rendering enforces the all-placeholders-bound precondition.
        template.render(bindings)?;
        if cancel.is_cancelled() {
            return Err(BackendError::Cancelled);
        }
        let rule = self
            .rules
            .get(&template.name)
            .ok_or_else(|| BackendError::NoStubRule(template.name.clone()))?;
        finish(template, rule(bindings), 0, BackendMode::Stub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm_backend::OutputSchema;

    fn echo() -> (StubBackend, PromptTemplate) {
        let stub = StubBackend::new().with_rule("echo", |b| format!("said: {}", b["x"]));
        let tpl = PromptTemplate::new("echo", "Say {x}", OutputSchema::Fields(vec!["said".into()]));
        (stub, tpl)
    }

    #[test]
    fn same_inputs_give_identical_results() {
        let (stub, tpl) = echo();
        let mut b = Bindings::new();
        b.insert("x".into(), "hello".into());
        let first = stub.complete(&tpl, &b).unwrap();
        let second = stub.complete(&tpl, &b).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.first("said"), Some("hello"));
        assert_eq!(first.mode, BackendMode::Stub);
    }

    #[test]
    fn unbound_placeholder_is_rejected_before_the_rule_runs() {
        let (stub, tpl) = echo();
        assert_eq!(
            stub.complete(&tpl, &Bindings::new()),
            Err(BackendError::UnboundPlaceholder("x".into()))
        );
    }

    #[test]
    fn cancelled_and_unknown_templates_error() {
        let (stub, tpl) = echo();
        let mut b = Bindings::new();
        b.insert("x".into(), "hi".into());
        let token = CancelToken::new();
        token.cancel();
        assert_eq!(stub.complete_cancellable(&tpl, &b, &token), Err(BackendError::Cancelled));
        let other = PromptTemplate::new("other", "no placeholders", OutputSchema::FreeText);
        assert_eq!(
            stub.complete(&other, &b),
            Err(BackendError::NoStubRule("other".into()))
        );
    }
}
