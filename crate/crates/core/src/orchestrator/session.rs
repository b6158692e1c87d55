use std::sync::Arc;

use serde::Serialize;

use super::{ActionKind, EngineAction, EngineError, RankedSpot, Resources};
use crate::common_ground::{CommonGroundTree, Preference};
use crate::dialogue_policy::{
    generate_candidate_das, realize_response, segment_into_chunks, select_da, CandidateInputs, DialogueAct,
    DialogueActType, DialogueHistory,
};
use crate::expression_motion::{classify, Expression, Motion};
use crate::llm_backend::{call_site, CancelToken};
use crate::spot_search::{build_query, search_spots, SearchQuery};
use crate::voice_action::{
    format_decision, on_ack, on_barge_in, propose_voice_action, start_delivery, AckEvent, AckKind, AsrEvent,
    DecisionTracker, DeliveryState, Proposal, VoiceActionDecision, VoiceActionType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerKind {
    SilenceTimeout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent {
    Asr(AsrEvent),
    Ack(AckEvent),
    Timer { kind: TimerKind, due_ms: u64 },
    /// A voice-action proposal computed off the session thread.
    VoiceProposal { sequence: u64, proposal: Proposal },
}

/// Work for a voice-action backend call that may run elsewhere; its
/// result comes back as [`EngineEvent::VoiceProposal`].
pub struct VoiceJob {
    resources: Arc<Resources>,
    history: DialogueHistory,
    event: AsrEvent,
    tokens_since_action: usize,
    cancel: CancelToken,
}

impl VoiceJob {
    pub fn sequence(&self) -> u64 {
        self.event.sequence
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.is_cancelled()
    }

    pub fn run(self) -> EngineEvent {
        let r = &self.resources;
        let proposal = if self.cancel.is_cancelled() {
            Proposal::none()
        } else {
            propose_voice_action(
                &self.history,
                &self.event,
                self.tokens_since_action,
                r.backend.as_ref(),
                r.prompts.get(call_site::VOICE_ACTION),
                &r.config.voice,
            )
        };
        EngineEvent::VoiceProposal {
            sequence: self.event.sequence,
            proposal,
        }
    }
}

/// What happened in one completed user turn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnRecord {
    pub user_turn: usize,
    pub extracted: Vec<Preference>,
    pub accepted: Vec<Preference>,
    pub recorded: usize,
    pub switched_topic: bool,
    pub act: DialogueAct,
    pub response: String,
    pub chunks: Vec<String>,
    pub query: SearchQuery,
}

/// One conversation. Every state change goes through
/// [`handle_event`](Self::handle_event), one event at a time.
pub struct Session {
    id: String,
    resources: Arc<Resources>,
    tree: CommonGroundTree,
    history: DialogueHistory,
    delivery: DeliveryState,
    tracker: DecisionTracker,
    decisions: Vec<VoiceActionDecision>,
    turns: Vec<TurnRecord>,
    clock_ms: u64,
    next_idx: u64,
    silence_due: Option<u64>,
    pending_cancel: Option<CancelToken>,
    speaking: Option<(Expression, Motion, usize)>,
    log: Vec<String>,
}

#[derive(Serialize)]
pub struct SessionSnapshot<'a> {
    pub id: &'a str,
    pub tree: &'a CommonGroundTree,
    pub query: SearchQuery,
    pub history: &'a DialogueHistory,
    pub delivery: &'a DeliveryState,
    pub decisions: &'a [VoiceActionDecision],
    pub clock_ms: u64,
}

impl Session {
    pub(crate) fn new(id: String, resources: Arc<Resources>) -> Self {
        let tracker = DecisionTracker::new(resources.config.voice.clone());
        Self {
            id,
            resources,
            tree: CommonGroundTree::new(),
            history: DialogueHistory::new(),
            delivery: DeliveryState::idle(),
            tracker,
            decisions: Vec::new(),
            turns: Vec::new(),
            clock_ms: 0,
            next_idx: 0,
            silence_due: None,
            pending_cancel: None,
            speaking: None,
            log: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tree(&self) -> &CommonGroundTree {
        &self.tree
    }

    pub fn history(&self) -> &DialogueHistory {
        &self.history
    }

    pub fn delivery(&self) -> &DeliveryState {
        &self.delivery
    }

    pub fn decisions(&self) -> &[VoiceActionDecision] {
        &self.decisions
    }

    pub fn turns(&self) -> &[TurnRecord] {
        &self.turns
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    /// Decision and action lines in emission order.
    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn snapshot(&self) -> SessionSnapshot<'_> {
        SessionSnapshot {
            id: &self.id,
            tree: &self.tree,
            query: build_query(&self.tree),
            history: &self.history,
            delivery: &self.delivery,
            decisions: &self.decisions,
            clock_ms: self.clock_ms,
        }
    }

    /// The next timer the caller should deliver, as `(kind, due ms)`.
    pub fn next_timer(&self) -> Option<(TimerKind, u64)> {
        self.silence_due.map(|due| (TimerKind::SilenceTimeout, due))
    }

    /// Process one event with all backend calls made inline.
    pub fn handle_event(&mut self, event: EngineEvent) -> Result<Vec<EngineAction>, EngineError> {
        match event {
            EngineEvent::Asr(asr) if !asr.is_final => {
                let (mut actions, job) = self.submit_partial(asr)?;
                actions.extend(self.handle_event(job.run())?);
                Ok(actions)
            }
            EngineEvent::Asr(asr) => self.on_final(asr),
            EngineEvent::Ack(ack) => {
                self.check_session(&ack.session_id)?;
                self.advance(ack.timestamp_ms);
                Ok(self.release_next(ack.timestamp_ms, &ack))
            }
            EngineEvent::Timer { kind: TimerKind::SilenceTimeout, due_ms } => {
                if self.silence_due != Some(due_ms) {
                    return Ok(Vec::new());
                }
                self.advance(due_ms);
                let ack = AckEvent {
                    session_id: self.id.clone(),
                    kind: AckKind::SilenceTimeout,
                    timestamp_ms: due_ms,
                };
                Ok(self.release_next(due_ms, &ack))
            }
            EngineEvent::VoiceProposal { sequence, proposal } => {
                let Some(decision) = self.tracker.resolve(sequence, proposal) else {
                    return Ok(Vec::new());
                };
                if self.pending_cancel.as_ref().is_some() {
                    self.pending_cancel = None;
                }
                Ok(self.apply_decision(decision))
            }
        }
    }

    /// Register a partial ASR update and return the backend work for its
    /// decision. Any earlier undecided update is closed as `none` here.
    pub fn submit_partial(&mut self, asr: AsrEvent) -> Result<(Vec<EngineAction>, VoiceJob), EngineError> {
        self.check_session(&asr.session_id)?;
        let (superseded, pending) = self.tracker.open(&asr)?;
        if let Some(token) = self.pending_cancel.take() {
            token.cancel();
        }
        self.advance(asr.timestamp_ms);
        let mut actions = Vec::new();
        if let Some(d) = superseded {
            actions.extend(self.apply_decision(d));
        }
        self.barge_in(&asr);
        let cancel = CancelToken::new();
        self.pending_cancel = Some(cancel.clone());
        let job = VoiceJob {
            resources: self.resources.clone(),
            history: self.history.clone(),
            tokens_since_action: pending.tokens_since_action,
            event: asr,
            cancel,
        };
        Ok((actions, job))
    }

    fn check_session(&self, got: &str) -> Result<(), EngineError> {
        if got != self.id {
            return Err(EngineError::WrongSession {
                expected: self.id.clone(),
                got: got.to_string(),
            });
        }
        Ok(())
    }

    fn advance(&mut self, t_ms: u64) {
        self.clock_ms = self.clock_ms.max(t_ms);
    }

    fn barge_in(&mut self, asr: &AsrEvent) {
        if on_barge_in(&mut self.delivery, asr, self.resources.config.voice.barge_in_tokens) > 0 {
            self.silence_due = None;
            self.speaking = None;
        }
    }

    fn emit(&mut self, kind: ActionKind) -> EngineAction {
        let action = EngineAction {
            session: self.id.clone(),
            idx: self.next_idx,
            kind,
        };
        self.next_idx += 1;
        self.log.push(action.log_line());
        action
    }

    fn record_decision(&mut self, decision: &VoiceActionDecision) {
        self.log.push(format_decision(decision));
        self.decisions.push(decision.clone());
    }

    fn apply_decision(&mut self, decision: VoiceActionDecision) -> Vec<EngineAction> {
        self.record_decision(&decision);
        match decision.action {
            VoiceActionType::Nod => vec![self.emit(ActionKind::Nod {
                seq: decision.triggering_sequence,
            })],
            VoiceActionType::NodBackchannel => vec![self.emit(ActionKind::Backchannel {
                seq: decision.triggering_sequence,
                token: decision.backchannel_text.unwrap_or_default(),
            })],
            // Responses come only from the final-result pipeline.
            VoiceActionType::Response | VoiceActionType::None => Vec::new(),
        }
    }

    fn on_final(&mut self, asr: AsrEvent) -> Result<Vec<EngineAction>, EngineError> {
        self.check_session(&asr.session_id)?;
        let (superseded, pending) = self.tracker.open(&asr)?;
        if let Some(token) = self.pending_cancel.take() {
            token.cancel();
        }
        self.advance(asr.timestamp_ms);
        let mut actions = Vec::new();
        if let Some(d) = superseded {
            actions.extend(self.apply_decision(d));
        }
        self.barge_in(&asr);
        let r = self.resources.clone();
        let proposal = propose_voice_action(
            &self.history,
            &asr,
            pending.tokens_since_action,
            r.backend.as_ref(),
            r.prompts.get(call_site::VOICE_ACTION),
            &r.config.voice,
        );
        let decision = self
            .tracker
            .resolve(asr.sequence, proposal)
            .expect("the slot was opened just above");
        self.record_decision(&decision);
        if asr.partial_text.trim().is_empty() {
            return Ok(actions);
        }
        actions.extend(self.respond(&asr));
        Ok(actions)
    }

    /// The full turn: ground, search, choose, realize, record, deliver.
    fn respond(&mut self, asr: &AsrEvent) -> Vec<EngineAction> {
        let r = self.resources.clone();
        let backend = r.backend.as_ref();
        let utterance = asr.partial_text.trim();
        let user_turn = self.history.push_user(utterance);

        let extracted = r
            .grounder
            .extract_preferences(utterance, user_turn, &self.history, backend)
            .unwrap_or_default();
        let active = self.tree.active_preferences();
        let pending: Vec<Preference> = extracted
            .iter()
            .filter(|p| !active.iter().any(|a| a.same_as(p)))
            .cloned()
            .collect();

        let projected = self.tree.projected_active(&pending, user_turn);
        let projected_query = SearchQuery::from_preferences(&projected);
        let hits = search_spots(&projected_query, &r.db, r.config.limit);

        let candidates = generate_candidate_das(CandidateInputs {
            results: &hits,
            tree: &self.tree,
            history: &self.history,
            pending: &pending,
            lexicon: &r.lexicon,
            top_k: r.config.top_k,
        });
        let act = select_da(&candidates, utterance, &self.history, backend, r.prompts.get(call_site::SELECT_DA))
            .cloned()
            .unwrap_or_else(|_| DialogueAct::new(DialogueActType::Acknowledge, "fallback"));
        let response = realize_response(
            &act,
            &self.history,
            backend,
            r.prompts.get(call_site::REALIZE_RESPONSE),
            &r.templates,
        )
        .unwrap_or_else(|_| r.templates.render(&DialogueAct::new(DialogueActType::Acknowledge, "fallback")));

        let accepted = r
            .grounder
            .filter_accepted(&response, &extracted, backend)
            .unwrap_or_default();
        let outcome = self
            .tree
            .record(&accepted, user_turn)
            .expect("filter_accepted returns accepted preferences");
        let query = build_query(&self.tree);
        let final_hits = search_spots(&query, &r.db, r.config.limit);

        let mut actions = vec![
            self.emit(ActionKind::QueryUpdate(query.clone())),
            self.emit(ActionKind::ResultsUpdate(RankedSpot::from_hits(&final_hits))),
            self.emit(ActionKind::ground(&self.tree)),
        ];

        let chunks = segment_into_chunks(&response);
        let (expression, motion) = classify(&response, r.classifier.as_ref()).unwrap_or((Expression::Neutral, Motion::Idle));
        if let Ok(first) = start_delivery(&mut self.delivery, chunks.clone()) {
            self.speaking = Some((expression, motion, chunks.len()));
            actions.push(self.speak(first, asr.timestamp_ms));
        }
        self.history.push_system(&response, act.clone());
        self.turns.push(TurnRecord {
            user_turn,
            extracted,
            accepted,
            recorded: outcome.added,
            switched_topic: outcome.switched_topic,
            act,
            response,
            chunks,
            query,
        });
        actions
    }

    fn speak(&mut self, text: String, now_ms: u64) -> EngineAction {
        let (expression, motion, of) = self.speaking.unwrap_or((Expression::Neutral, Motion::Idle, 1));
        let chunk = of - self.delivery.pending_len();
        self.silence_due = self
            .delivery
            .awaiting_ack()
            .then(|| now_ms + self.resources.config.voice.silence_timeout_ms);
        self.emit(ActionKind::Speak {
            text,
            expression,
            motion,
            chunk,
            of,
        })
    }

    fn release_next(&mut self, now_ms: u64, ack: &AckEvent) -> Vec<EngineAction> {
        match on_ack(&mut self.delivery, ack) {
            Some(chunk) => vec![self.speak(chunk, now_ms)],
            None => {
                self.silence_due = None;
                Vec::new()
            }
        }
    }
}
