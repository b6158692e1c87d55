use super::{DialogueAct, DialogueActType, DialogueHistory};
use crate::common_ground::{CommonGroundTree, Lexicon, Preference};
use crate::spot_search::{Facet, Hit};
use crate::text;

pub const DEFAULT_TOP_K: usize = 3;

const CLOSINGS: [&str; 6] = ["goodbye", "bye", "that's all", "that is all", "see you", "thanks, bye"];

/// Everything the rule table looks at.
#[derive(Debug, Clone, Copy)]
pub struct CandidateInputs<'a> {
    pub results: &'a [Hit<'a>],
    pub tree: &'a CommonGroundTree,
    pub history: &'a DialogueHistory,
    /// Extracted preferences this turn that the active topic does not hold yet.
    pub pending: &'a [Preference],
    pub lexicon: &'a Lexicon,
    pub top_k: usize,
}

fn facet_topic(facet: Facet) -> &'static str {
    match facet {
        Facet::MajorCategory => "kind of place",
        Facet::Subcategory => "type of spot",
        Facet::MinorCategory => "particular sights",
        Facet::Other => "area",
    }
}

/// Phrase naming the pending preferences, e.g. "temples in Kyoto".
pub fn confirm_phrase(pending: &[Preference], lexicon: &Lexicon, said: &str) -> String {
    let mut things: Vec<String> = Vec::new();
    let mut places: Vec<String> = Vec::new();
    for p in pending {
        let (bucket, phrase) = if p.facet() == Facet::Other {
            (&mut places, p.value().to_string())
        } else {
            (&mut things, lexicon.display_for(p.facet(), p.value(), said))
        };
        if !bucket.contains(&phrase) {
            bucket.push(phrase);
        }
    }
    let mut out = if things.is_empty() {
        "spots".to_string()
    } else {
        things.join(" and ")
    };
    if !places.is_empty() {
        out.push_str(" in ");
        out.push_str(&places.join(" and "));
    }
    out
}

fn spot_act(act_type: DialogueActType, hit: &Hit<'_>, rank: usize, note: String) -> DialogueAct {
    let r = hit.record;
    let mut act = DialogueAct::new(act_type, note)
        .with_slot("spot_name", r.name.clone())
        .with_slot("description", r.description.clone())
        .with_slot("opening_hours", r.opening_hours.clone())
        .with_slot("fee", r.fee.clone());
    act.spot_id = Some(r.id.clone());
    act.spot_rank = Some(rank);
    act
}

/// Enumerate every act the system can currently say.
///
/// Rules: each of the top-k spots yields a proposal plus one inform act per
/// non-empty detail field; a missing facet in the (projected) active topic
/// yields a question; new preferences yield one confirmation; a spoken
/// closing yields a farewell; a shortlist that has been fully proposed
/// yields a next-step question. Acknowledging is always possible, so the
/// result is never empty.
pub fn generate_candidate_das(inputs: CandidateInputs<'_>) -> Vec<DialogueAct> {
    let said = inputs.history.last_user_text().unwrap_or("");
    let turn = inputs.history.next_index();
    let mut out = Vec::new();

    if !inputs.pending.is_empty() {
        let mut act = DialogueAct::new(DialogueActType::ConfirmPreference, "new preferences this turn")
            .with_slot("items", confirm_phrase(inputs.pending, inputs.lexicon, said));
        act.confirms = inputs.pending.to_vec();
        out.push(act);
    }

    let top = &inputs.results[..inputs.results.len().min(inputs.top_k)];
    for (rank, hit) in top.iter().enumerate() {
        let note = |what: &str| format!("{what} of ranked spot {} (score {})", rank + 1, hit.score);
        out.push(spot_act(DialogueActType::ProposeSpot, hit, rank, note("proposal")));
        let fields = [
            (DialogueActType::InformDescription, &hit.record.description),
            (DialogueActType::InformHours, &hit.record.opening_hours),
            (DialogueActType::InformFee, &hit.record.fee),
        ];
        for (act_type, value) in fields {
            if !value.trim().is_empty() {
                out.push(spot_act(act_type, hit, rank, note(act_type.label())));
            }
        }
    }

    let projected = inputs.tree.projected_active(inputs.pending, turn);
    if let Some(missing) = Facet::ALL
        .into_iter()
        .find(|f| !projected.iter().any(|p| p.facet() == *f))
    {
        out.push(
            DialogueAct::new(DialogueActType::AskPreference, format!("{missing} not yet known"))
                .with_slot("facet_topic", facet_topic(missing)),
        );
    }

    if !top.is_empty()
        && top.iter().all(|hit| {
            inputs
                .history
                .system_acts()
                .any(|a| a.act_type == DialogueActType::ProposeSpot && a.spot_id.as_deref() == Some(hit.record.id.as_str()))
        })
    {
        out.push(DialogueAct::new(DialogueActType::AskNextStep, "every shortlisted spot was proposed"));
    }

    if CLOSINGS.iter().any(|c| text::contains_phrase(said, c)) {
        out.push(DialogueAct::new(DialogueActType::Farewell, "user closed the conversation"));
    }

    out.push(DialogueAct::new(DialogueActType::Acknowledge, "always sayable"));
    out
}
