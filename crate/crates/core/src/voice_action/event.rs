use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One update of the in-progress speech recognition result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsrEvent {
    pub session_id: String,
    pub partial_text: String,
    pub is_final: bool,
    pub sequence: u64,
    pub timestamp_ms: u64,
}

impl AsrEvent {
    pub fn partial(session_id: &str, sequence: u64, timestamp_ms: u64, text: &str) -> Self {
        Self {
            session_id: session_id.to_string(),
            partial_text: text.to_string(),
            is_final: false,
            sequence,
            timestamp_ms,
        }
    }

    pub fn final_(session_id: &str, sequence: u64, timestamp_ms: u64, text: &str) -> Self {
        Self {
            is_final: true,
            ..Self::partial(session_id, sequence, timestamp_ms, text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckKind {
    UserNod,
    UserBackchannel,
    SilenceTimeout,
}

impl AckKind {
    pub fn label(self) -> &'static str {
        match self {
            AckKind::UserNod => "user_nod",
            AckKind::UserBackchannel => "user_backchannel",
            AckKind::SilenceTimeout => "silence_timeout",
        }
    }
}

impl fmt::Display for AckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "user_nod" | "nod" => Ok(AckKind::UserNod),
            "user_backchannel" | "backchannel" => Ok(AckKind::UserBackchannel),
            "silence_timeout" | "silence" => Ok(AckKind::SilenceTimeout),
            other => Err(format!("unknown ack kind `{other}`")),
        }
    }
}

/// A sign that the user has taken in the last chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckEvent {
    pub session_id: String,
    pub kind: AckKind,
    pub timestamp_ms: u64,
}
