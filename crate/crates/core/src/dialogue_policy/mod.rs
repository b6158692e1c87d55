//! Response generation: enumerate every sayable dialogue act by rule, let
//! the backend pick one from that closed list, realize it as text and cut it
//! into clause chunks.

mod act;
mod generate;
mod history;
mod realize;
mod segment;
mod select;

pub use act::{ActError, DialogueAct, DialogueActType};
pub use generate::{confirm_phrase, generate_candidate_das, CandidateInputs, DEFAULT_TOP_K};
pub use history::{DialogueHistory, Speaker, Turn};
pub use realize::{realize_response, stub_realize_rule, TemplateSet};
pub use segment::{join_chunks, segment_into_chunks};
pub use select::{render_candidates, select_da, stub_choice, stub_select_rule, STUB_PRIORITY};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("no candidate dialogue acts")]
    NoCandidates,
    #[error(transparent)]
    InvalidAct(#[from] ActError),
    #[error("template directory {0} is not readable")]
    TemplateDir(String),
    #[error("template for {act}: {reason}")]
    BadTemplate { act: DialogueActType, reason: String },
}
