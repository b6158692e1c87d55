use std::collections::BTreeMap;
use std::path::Path;

use super::{DialogueAct, DialogueActType, DialogueHistory, PolicyError};
use crate::llm_backend::{Bindings, LlmBackend, PromptTemplate};
use crate::text;

/// One realization template per act type, with `{slot}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<DialogueActType, String>,
}

fn builtin_text(act_type: DialogueActType) -> &'static str {
    match act_type {
        DialogueActType::ProposeSpot => include_str!("../../resources/templates/propose_spot.txt"),
        DialogueActType::InformDescription => include_str!("../../resources/templates/inform_description.txt"),
        DialogueActType::InformHours => include_str!("../../resources/templates/inform_hours.txt"),
        DialogueActType::InformFee => include_str!("../../resources/templates/inform_fee.txt"),
        DialogueActType::AskPreference => include_str!("../../resources/templates/ask_preference.txt"),
        DialogueActType::ConfirmPreference => include_str!("../../resources/templates/confirm_preference.txt"),
        DialogueActType::Acknowledge => include_str!("../../resources/templates/acknowledge.txt"),
        DialogueActType::AskNextStep => include_str!("../../resources/templates/ask_next_step.txt"),
        DialogueActType::Farewell => include_str!("../../resources/templates/farewell.txt"),
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = DialogueActType::ALL
            .into_iter()
            .map(|t| (t, builtin_text(t).trim().to_string()))
            .collect();
        Self { templates }
    }

    /// Load `<act_type>.txt` files from `dir`, keeping built-ins for missing
    /// files. Templates may only reference their act's slots.
    pub fn load_dir(dir: &Path) -> Result<Self, PolicyError> {
        if !dir.is_dir() {
            return Err(PolicyError::TemplateDir(dir.display().to_string()));
        }
        let mut set = Self::builtin();
        for act_type in DialogueActType::ALL {
            let path = dir.join(format!("{}.txt", act_type.label()));
            if path.exists() {
                let body = std::fs::read_to_string(&path)
                    .map_err(|e| PolicyError::TemplateDir(format!("{}: {e}", path.display())))?;
                set.set(act_type, body.trim())?;
            }
        }
        Ok(set)
    }

    pub fn set(&mut self, act_type: DialogueActType, template: &str) -> Result<(), PolicyError> {
        if template.trim().is_empty() {
            return Err(PolicyError::BadTemplate {
                act: act_type,
                reason: "template is empty".into(),
            });
        }
        if let Some(bad) = text::placeholders(template)
            .into_iter()
            .find(|p| !act_type.slots().contains(&p.as_str()))
        {
            return Err(PolicyError::BadTemplate {
                act: act_type,
                reason: format!("unknown slot `{bad}`"),
            });
        }
        self.templates.insert(act_type, template.to_string());
        Ok(())
    }

    pub fn get(&self, act_type: DialogueActType) -> &str {
        &self.templates[&act_type]
    }

    pub fn render(&self, act: &DialogueAct) -> String {
        let mut slots: BTreeMap<String, String> = act
            .act_type
            .slots()
            .iter()
            .map(|s| (s.to_string(), String::new()))
            .collect();
        slots.extend(act.content.clone());
        text::fill(self.get(act.act_type), &slots).expect("template slots validated on load")
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

fn render_slots(act: &DialogueAct) -> String {
    act.content
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_slots(raw: &str) -> BTreeMap<String, String> {
    raw.lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .collect()
}

/// Stub completion for the realization prompt: fills the act's template.
pub fn stub_realize_rule(templates: TemplateSet) -> impl Fn(&Bindings) -> String + Send + Sync + 'static {
    move |bindings| {
        let Some(act_type) = bindings.get("act_type").and_then(|a| a.parse::<DialogueActType>().ok()) else {
            return String::new();
        };
        let mut act = DialogueAct::new(act_type, "");
        act.content = parse_slots(bindings.get("slots").map(String::as_str).unwrap_or(""));
        templates.render(&act)
    }
}

/// Surface text for `act`; the template is used whenever the backend fails.
pub fn realize_response(
    act: &DialogueAct,
    history: &DialogueHistory,
    backend: &dyn LlmBackend,
    prompt: &PromptTemplate,
    templates: &TemplateSet,
) -> Result<String, PolicyError> {
    act.validate()?;
    let mut bindings = Bindings::new();
    bindings.insert("act_type".into(), act.act_type.label().to_string());
    bindings.insert("slots".into(), render_slots(act));
    bindings.insert("history".into(), history.render());
    let text = match backend.complete(prompt, &bindings) {
        Ok(reply) => reply.text.trim().to_string(),
        Err(err) => {
            tracing::warn!(error = %err, act = %act.act_type, "realization fell back to template");
            templates.render(act)
        }
    };
    if text.is_empty() {
        return Ok(templates.render(act));
    }
    Ok(text)
}
