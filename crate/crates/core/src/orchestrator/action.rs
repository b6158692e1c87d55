use serde::{Deserialize, Serialize};

use crate::common_ground::CommonGroundTree;
use crate::expression_motion::{Expression, Motion};
use crate::spot_search::{Hit, SearchQuery};

/// One ranked search result as sent to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSpot {
    pub rank: usize,
    pub id: String,
    pub name: String,
    pub score: u32,
}

impl RankedSpot {
    pub fn from_hits(hits: &[Hit<'_>]) -> Vec<RankedSpot> {
        hits.iter()
            .enumerate()
            .map(|(i, h)| RankedSpot {
                rank: i + 1,
                id: h.record.id.clone(),
                name: h.record.name.clone(),
                score: h.score,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ActionKind {
    Speak {
        text: String,
        expression: Expression,
        motion: Motion,
        /// 1-based position of this chunk in its response.
        chunk: usize,
        of: usize,
    },
    Nod {
        seq: u64,
    },
    Backchannel {
        seq: u64,
        token: String,
    },
    QueryUpdate(SearchQuery),
    /// Serialized [`CommonGroundTree`].
    GroundUpdate(serde_json::Value),
    ResultsUpdate(Vec<RankedSpot>),
}

impl ActionKind {
    pub fn ground(tree: &CommonGroundTree) -> Self {
        ActionKind::GroundUpdate(serde_json::to_value(tree).expect("tree serializes"))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ActionKind::Speak { .. } => "speak",
            ActionKind::Nod { .. } => "nod",
            ActionKind::Backchannel { .. } => "backchannel",
            ActionKind::QueryUpdate(_) => "query_update",
            ActionKind::GroundUpdate(_) => "ground_update",
            ActionKind::ResultsUpdate(_) => "results_update",
        }
    }

    pub fn payload(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("actions serialize");
        v.get_mut("payload").map(serde_json::Value::take).unwrap_or(serde_json::Value::Null)
    }
}

/// An output command, stamped with its session and a per-session index.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineAction {
    pub session: String,
    pub idx: u64,
    pub kind: ActionKind,
}

impl EngineAction {
    /// Stable one-line rendering for replay logs.
    pub fn log_line(&self) -> String {
        format!("act {} {} {}", self.idx, self.kind.type_name(), self.kind.payload())
    }
}
