//! Newline-delimited JSON messages between clients and the engine.

use serde::{Deserialize, Serialize};

use super::{ActionKind, EngineAction, EngineEvent};
use crate::voice_action::{AckEvent, AckKind, AsrEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientType {
    AsrPartial,
    AsrFinal,
    Ack,
}

/// Client to server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientMessage {
    #[serde(rename = "type")]
    pub kind_of: ClientType,
    pub session: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default)]
    pub seq: u64,
    pub t_ms: u64,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    #[serde(rename = "type")]
    pub kind_of: String,
    pub session: String,
    pub idx: u64,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("bad message: {0}")]
    Json(String),
    #[error("`{0}` message needs a `text` field")]
    MissingText(&'static str),
    #[error("unknown ack kind: {0}")]
    BadAckKind(String),
}

impl ClientMessage {
    pub fn parse(line: &str) -> Result<Self, WireError> {
        serde_json::from_str(line.trim()).map_err(|e| WireError::Json(e.to_string()))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("client messages serialize")
    }

    pub fn into_event(self) -> Result<EngineEvent, WireError> {
        match self.kind_of {
            ClientType::AsrPartial | ClientType::AsrFinal => {
                let is_final = self.kind_of == ClientType::AsrFinal;
                let text = self
                    .text
                    .ok_or(WireError::MissingText(if is_final { "asr_final" } else { "asr_partial" }))?;
                Ok(EngineEvent::Asr(AsrEvent {
                    session_id: self.session,
                    partial_text: text,
                    is_final,
                    sequence: self.seq,
                    timestamp_ms: self.t_ms,
                }))
            }
            ClientType::Ack => {
                let kind = match self.kind.as_deref() {
                    None => AckKind::UserNod,
                    Some(k) => k.parse().map_err(WireError::BadAckKind)?,
                };
                Ok(EngineEvent::Ack(AckEvent {
                    session_id: self.session,
                    kind,
                    timestamp_ms: self.t_ms,
                }))
            }
        }
    }
}

impl From<&EngineAction> for ServerMessage {
    fn from(a: &EngineAction) -> Self {
        ServerMessage {
            kind_of: a.kind.type_name().to_string(),
            session: a.session.clone(),
            idx: a.idx,
            payload: a.kind.payload(),
        }
    }
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }

    pub fn parse(line: &str) -> Result<Self, WireError> {
        serde_json::from_str(line.trim()).map_err(|e| WireError::Json(e.to_string()))
    }

    pub fn to_action(&self) -> Result<EngineAction, WireError> {
        let kind: ActionKind = serde_json::from_value(serde_json::json!({
            "type": self.kind_of,
            "payload": self.payload,
        }))
        .map_err(|e| WireError::Json(e.to_string()))?;
        Ok(EngineAction {
            session: self.session.clone(),
            idx: self.idx,
            kind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common_ground::CommonGroundTree;
    use crate::expression_motion::{Expression, Motion};
    use crate::orchestrator::RankedSpot;
    use crate::spot_search::SearchQuery;

    #[test]
    fn client_messages_parse() {
        let m = ClientMessage::parse(r#"{"type":"asr_partial","session":"s1","text":"Yes,","seq":1,"t_ms":120}"#).unwrap();
        assert_eq!(
            m.clone().into_event().unwrap(),
            EngineEvent::Asr(AsrEvent::partial("s1", 1, 120, "Yes,"))
        );
        assert_eq!(ClientMessage::parse(&m.to_line()).unwrap(), m);
        let ack = ClientMessage::parse(r#"{"type":"ack","session":"s1","kind":"user_nod","seq":0,"t_ms":900}"#).unwrap();
        assert!(matches!(ack.into_event().unwrap(), EngineEvent::Ack(AckEvent { kind: AckKind::UserNod, .. })));
        let bad = ClientMessage::parse(r#"{"type":"asr_final","session":"s1","seq":2,"t_ms":1}"#).unwrap();
        assert_eq!(bad.into_event(), Err(WireError::MissingText("asr_final")));
        assert!(ClientMessage::parse(r#"{"type":"shout","session":"s1","seq":2,"t_ms":1}"#).is_err());
    }

    #[test]
    fn every_action_round_trips() {
        let kinds = vec![
            ActionKind::Speak {
                text: "Alright,".into(),
                expression: Expression::Neutral,
                motion: Motion::NodMotion,
                chunk: 1,
                of: 2,
            },
            ActionKind::Nod { seq: 3 },
            ActionKind::Backchannel {
                seq: 4,
                token: "uh-huh".into(),
            },
            ActionKind::QueryUpdate(SearchQuery {
                major_categories: vec!["Sightseeing".into()],
                other: vec!["Kyoto".into()],
                ..Default::default()
            }),
            ActionKind::ground(&CommonGroundTree::new()),
            ActionKind::ResultsUpdate(vec![RankedSpot {
                rank: 1,
                id: "kyo-001".into(),
                name: "Kiyomizu-dera".into(),
                score: 7,
            }]),
        ];
        for (i, kind) in kinds.into_iter().enumerate() {
            let action = EngineAction {
                session: "s1".into(),
                idx: i as u64,
                kind,
            };
            let msg = ServerMessage::from(&action);
            let line = msg.to_line();
            assert!(!line.contains('\n'));
            let back = ServerMessage::parse(&line).unwrap();
            assert_eq!(back, msg);
            assert_eq!(back.to_action().unwrap(), action);
        }
    }
}
