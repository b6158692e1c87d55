use serde::Serialize;

use super::DialogueAct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub act: Option<DialogueAct>,
}

/// Ordered dialogue turns; indices are assigned on push and strictly increase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DialogueHistory {
    turns: Vec<Turn>,
}

/// Number of trailing turns rendered into prompts.
const PROMPT_WINDOW: usize = 12;

impl DialogueHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn next_index(&self) -> usize {
        self.turns.last().map_or(0, |t| t.index + 1)
    }

    pub fn push_user(&mut self, text: &str) -> usize {
        self.push(Speaker::User, text, None)
    }

    pub fn push_system(&mut self, text: &str, act: DialogueAct) -> usize {
        self.push(Speaker::System, text, Some(act))
    }

    fn push(&mut self, speaker: Speaker, text: &str, act: Option<DialogueAct>) -> usize {
        let index = self.next_index();
        self.turns.push(Turn {
            index,
            speaker,
            text: text.to_string(),
            act,
        });
        index
    }

    pub fn last_user_text(&self) -> Option<&str> {
        self.turns
            .iter()
            .rev()
            .find(|t| t.speaker == Speaker::User)
            .map(|t| t.text.as_str())
    }

    /// Acts the system has already performed, oldest first.
    pub fn system_acts(&self) -> impl Iterator<Item = &DialogueAct> {
        self.turns.iter().filter_map(|t| t.act.as_ref())
    }

    pub fn render(&self) -> String {
        if self.turns.is_empty() {
            return "(no previous turns)".to_string();
        }
        let start = self.turns.len().saturating_sub(PROMPT_WINDOW);
        self.turns[start..]
            .iter()
            .map(|t| match t.speaker {
                Speaker::User => format!("User: {}", t.text),
                Speaker::System => format!("System: {}", t.text),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue_policy::DialogueActType;

    #[test]
    fn indices_increase_and_render() {
        let mut h = DialogueHistory::new();
        assert_eq!(h.push_user("Hello"), 0);
        assert_eq!(h.push_system("Alright then,", DialogueAct::new(DialogueActType::Acknowledge, "")), 1);
        assert_eq!(h.push_user("Temples please"), 2);
        assert_eq!(h.last_user_text(), Some("Temples please"));
        assert_eq!(h.system_acts().count(), 1);
        assert_eq!(h.render(), "User: Hello\nSystem: Alright then,\nUser: Temples please");
    }
}
