use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::common_ground::Preference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueActType {
    ProposeSpot,
    InformDescription,
    InformHours,
    InformFee,
    AskPreference,
    ConfirmPreference,
    Acknowledge,
    AskNextStep,
    Farewell,
}

impl DialogueActType {
    pub const ALL: [DialogueActType; 9] = [
        DialogueActType::ProposeSpot,
        DialogueActType::InformDescription,
        DialogueActType::InformHours,
        DialogueActType::InformFee,
        DialogueActType::AskPreference,
        DialogueActType::ConfirmPreference,
        DialogueActType::Acknowledge,
        DialogueActType::AskNextStep,
        DialogueActType::Farewell,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DialogueActType::ProposeSpot => "propose_spot",
            DialogueActType::InformDescription => "inform_description",
            DialogueActType::InformHours => "inform_hours",
            DialogueActType::InformFee => "inform_fee",
            DialogueActType::AskPreference => "ask_preference",
            DialogueActType::ConfirmPreference => "confirm_preference",
            DialogueActType::Acknowledge => "acknowledge",
            DialogueActType::AskNextStep => "ask_next_step",
            DialogueActType::Farewell => "farewell",
        }
    }

    /// Whether the act talks about a specific spot.
    pub fn is_spot_act(self) -> bool {
        matches!(
            self,
            DialogueActType::ProposeSpot
                | DialogueActType::InformDescription
                | DialogueActType::InformHours
                | DialogueActType::InformFee
        )
    }

    /// Content slot that must be non-empty for the act to be sayable.
    pub fn required_slot(self) -> Option<&'static str> {
        match self {
            DialogueActType::ProposeSpot => Some("spot_name"),
            DialogueActType::InformDescription => Some("description"),
            DialogueActType::InformHours => Some("opening_hours"),
            DialogueActType::InformFee => Some("fee"),
            DialogueActType::AskPreference => Some("facet_topic"),
            DialogueActType::ConfirmPreference => Some("items"),
            _ => None,
        }
    }

    /// Slots a realization template for this act may reference.
    pub fn slots(self) -> &'static [&'static str] {
        if self.is_spot_act() {
            return &["spot_name", "description", "opening_hours", "fee"];
        }
        match self {
            DialogueActType::AskPreference => &["facet_topic"],
            DialogueActType::ConfirmPreference => &["items"],
            _ => &[],
        }
    }
}

impl fmt::Display for DialogueActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DialogueActType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.label() == s.trim())
            .ok_or_else(|| format!("unknown dialogue act `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActError {
    #[error("{0} requires a spot id")]
    MissingSpot(DialogueActType),
    #[error("{0} must not carry a spot id")]
    UnexpectedSpot(DialogueActType),
    #[error("{act} requires a non-empty `{slot}` slot")]
    EmptySlot { act: DialogueActType, slot: &'static str },
}

/// A typed system act, bound to a spot where applicable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialogueAct {
    pub act_type: DialogueActType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_id: Option<String>,
    /// Position of the spot in the ranked results this act was built from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_rank: Option<usize>,
    pub content: BTreeMap<String, String>,
    /// Preferences a confirm act repeats back to the user.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub confirms: Vec<Preference>,
    pub feasibility_note: String,
}

impl DialogueAct {
    pub fn new(act_type: DialogueActType, feasibility_note: impl Into<String>) -> Self {
        Self {
            act_type,
            spot_id: None,
            spot_rank: None,
            content: BTreeMap::new(),
            confirms: Vec::new(),
            feasibility_note: feasibility_note.into(),
        }
    }

    pub fn with_slot(mut self, name: &str, value: impl Into<String>) -> Self {
        self.content.insert(name.to_string(), value.into());
        self
    }

    pub fn slot(&self, name: &str) -> &str {
        self.content.get(name).map(String::as_str).unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), ActError> {
        match (self.act_type.is_spot_act(), self.spot_id.is_some()) {
            (true, false) => return Err(ActError::MissingSpot(self.act_type)),
            (false, true) => return Err(ActError::UnexpectedSpot(self.act_type)),
            _ => {}
        }
        if let Some(slot) = self.act_type.required_slot() {
            if self.slot(slot).trim().is_empty() {
                return Err(ActError::EmptySlot { act: self.act_type, slot });
            }
        }
        Ok(())
    }

    /// Whether `other` would say the same thing: same type, spot and content.
    pub fn same_utterance_as(&self, other: &DialogueAct) -> bool {
        self.act_type == other.act_type && self.spot_id == other.spot_id && self.content == other.content
    }

    /// One-line rendering used in prompts and logs.
    pub fn summary(&self) -> String {
        let mut out = self.act_type.label().to_string();
        if let Some(id) = &self.spot_id {
            out.push_str(&format!(" spot={id}"));
        }
        for (k, v) in &self.content {
            if k != "description" {
                out.push_str(&format!(" {k}=\"{v}\""));
            }
        }
        out
    }
}
