use std::collections::BTreeMap;
use std::path::Path;

use super::{call_site, BackendError, Bindings};
use crate::text;

/// What a call site expects back from the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputSchema {
    FreeText,
    /// Delimited `key: value` lines; only these keys are read.
    Fields(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
    pub schema: OutputSchema,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>, schema: OutputSchema) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
            schema,
        }
    }

    pub fn placeholders(&self) -> Vec<String> {
        text::placeholders(&self.text)
    }

    pub fn render(&self, bindings: &Bindings) -> Result<String, BackendError> {
        text::fill(&self.text, bindings).map_err(|e| match e {
            text::PlaceholderError::Unbound(name) => BackendError::UnboundPlaceholder(name),
            other => BackendError::Malformed(format!("template `{}`: {other}", self.name)),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("reading prompt file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("prompt `{name}` is missing required placeholder `{placeholder}`")]
    MissingPlaceholder { name: String, placeholder: String },
}

/// One prompt per engine call site.
#[derive(Debug, Clone)]
pub struct PromptSet {
    prompts: BTreeMap<String, PromptTemplate>,
}

const DEFAULTS: [(&str, &str); 5] = [
    (
        call_site::EXTRACT_PREFERENCES,
        include_str!("../../resources/prompts/extract_preferences.txt"),
    ),
    (
        call_site::FILTER_ACCEPTED,
        include_str!("../../resources/prompts/filter_accepted.txt"),
    ),
    (call_site::SELECT_DA, include_str!("../../resources/prompts/select_da.txt")),
    (
        call_site::REALIZE_RESPONSE,
        include_str!("../../resources/prompts/realize_response.txt"),
    ),
    (
        call_site::VOICE_ACTION,
        include_str!("../../resources/prompts/voice_action.txt"),
    ),
];

/// Placeholders the engine binds at each call site.
pub fn required_placeholders(name: &str) -> &'static [&'static str] {
    match name {
        call_site::EXTRACT_PREFERENCES => &["utterance", "history", "taxonomy"],
        call_site::FILTER_ACCEPTED => &["response", "candidates"],
        call_site::SELECT_DA => &["utterance", "history", "candidates"],
        call_site::REALIZE_RESPONSE => &["act_type", "slots", "history"],
        call_site::VOICE_ACTION => &["history", "partial", "is_final", "tokens_since_action"],
        _ => &[],
    }
}

fn schema_for(name: &str) -> OutputSchema {
    let fields = |f: &[&str]| OutputSchema::Fields(f.iter().map(|s| s.to_string()).collect());
    match name {
        call_site::EXTRACT_PREFERENCES => fields(&["preference"]),
        call_site::FILTER_ACCEPTED => fields(&["accepted"]),
        call_site::SELECT_DA => fields(&["choice"]),
        call_site::VOICE_ACTION => fields(&["action", "backchannel"]),
        _ => OutputSchema::FreeText,
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        let prompts = DEFAULTS
            .iter()
            .map(|(name, text)| (name.to_string(), PromptTemplate::new(*name, *text, schema_for(name))))
            .collect();
        Self { prompts }
    }

    /// Load `<call_site>.txt` files from `dir`; call sites without a file keep
    /// the built-in prompt.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for name in call_site::ALL {
            let path = dir.join(format!("{name}.txt"));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })?;
            set.prompts
                .insert(name.to_string(), PromptTemplate::new(name, text, schema_for(name)));
        }
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        for (name, prompt) in &self.prompts {
            let present = prompt.placeholders();
            for required in required_placeholders(name) {
                if !present.iter().any(|p| p == required) {
                    return Err(TemplateError::MissingPlaceholder {
                        name: name.clone(),
                        placeholder: required.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> &PromptTemplate {
        self.prompts
            .get(name)
            .unwrap_or_else(|| panic!("no prompt registered for call site `{name}`"))
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_prompts_carry_required_placeholders() {
        PromptSet::builtin().validate().unwrap();
    }

    #[test]
    fn unbound_placeholder_is_named() {
        let prompt = PromptSet::builtin().get(call_site::FILTER_ACCEPTED).clone();
        let mut bindings = Bindings::new();
        bindings.insert("response".into(), "Alright.".into());
        assert_eq!(
            prompt.render(&bindings),
            Err(BackendError::UnboundPlaceholder("candidates".into()))
        );
    }

    #[test]
    fn override_dir_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("select_da.txt"), "Pick one: {candidates}").unwrap();
        let err = PromptSet::load_dir(dir.path()).unwrap_err();
        assert!(matches!(err, TemplateError::MissingPlaceholder { ref placeholder, .. } if placeholder == "utterance"));
    }
}
