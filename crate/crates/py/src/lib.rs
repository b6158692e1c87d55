//! Python bindings: engines and sessions, replay, search, segmentation,
//! voice-action rules and expression/motion classification.
//!
//! Structured results cross the boundary as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use flowdial_core::dialogue_policy;
use flowdial_core::expression_motion::{
    self, AnnotatedUtterance, ClassifyError, Expression, ExpressionMotionClassifier, FnClassifier, Motion,
    RuleClassifier,
};
use flowdial_core::llm_backend::BackendMode;
use flowdial_core::orchestrator::wire::ServerMessage;
use flowdial_core::orchestrator::{self as orch, EngineAction, EngineConfig, EngineEvent};
use flowdial_core::spot_search::{self, SearchQuery, SpotDatabase};
use flowdial_core::voice_action::{self, AckEvent, AsrEvent, VoiceConfig};

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn actions_to_py<'py>(py: Python<'py>, actions: &[EngineAction]) -> PyResult<Bound<'py, PyAny>> {
    let msgs: Vec<ServerMessage> = actions.iter().map(ServerMessage::from).collect();
    to_py(py, &msgs)
}

fn config(poi: Option<PathBuf>, templates: Option<PathBuf>, llm_mode: &str) -> PyResult<EngineConfig> {
    let mode: BackendMode = llm_mode.parse().map_err(err)?;
    Ok(EngineConfig {
        poi,
        templates,
        ..EngineConfig::default().with_mode(mode)
    })
}

/// Loaded resources; creates sessions.
#[pyclass(module = "flowdial")]
struct Engine {
    inner: orch::Engine,
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (poi=None, templates=None, llm_mode="stub"))]
    fn new(poi: Option<PathBuf>, templates: Option<PathBuf>, llm_mode: &str) -> PyResult<Self> {
        let inner = orch::Engine::new(config(poi, templates, llm_mode)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[pyo3(signature = (session_id=None))]
    fn create_session(&self, session_id: Option<&str>) -> Session {
        let inner = match session_id {
            Some(id) => self.inner.create_session_with_id(id),
            None => self.inner.create_session(),
        };
        Session { inner }
    }
}

/// One conversation. Each method feeds one event and returns the emitted
/// server messages as dicts.
#[pyclass(module = "flowdial")]
struct Session {
    inner: orch::Session,
}

#[pymethods]
impl Session {
    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    fn partial<'py>(&mut self, py: Python<'py>, text: &str, seq: u64, t_ms: u64) -> PyResult<Bound<'py, PyAny>> {
        let ev = AsrEvent::partial(self.inner.id(), seq, t_ms, text);
        let out = self.inner.handle_event(EngineEvent::Asr(ev)).map_err(err)?;
        actions_to_py(py, &out)
    }

    #[pyo3(name = "final")]
    fn final_<'py>(&mut self, py: Python<'py>, text: &str, seq: u64, t_ms: u64) -> PyResult<Bound<'py, PyAny>> {
        let ev = AsrEvent::final_(self.inner.id(), seq, t_ms, text);
        let out = self.inner.handle_event(EngineEvent::Asr(ev)).map_err(err)?;
        actions_to_py(py, &out)
    }

    #[pyo3(signature = (t_ms, kind="user_nod"))]
    fn ack<'py>(&mut self, py: Python<'py>, t_ms: u64, kind: &str) -> PyResult<Bound<'py, PyAny>> {
        let ev = AckEvent {
            session_id: self.inner.id().to_string(),
            kind: kind.parse().map_err(err)?,
            timestamp_ms: t_ms,
        };
        let out = self.inner.handle_event(EngineEvent::Ack(ev)).map_err(err)?;
        actions_to_py(py, &out)
    }

    /// Due time of the pending silence timer, if any.
    fn next_timer(&self) -> Option<u64> {
        self.inner.next_timer().map(|(_, due)| due)
    }

    /// Fire the pending timer.
    fn fire_timer<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let out = match self.inner.next_timer() {
            Some((kind, due_ms)) => self.inner.handle_event(EngineEvent::Timer { kind, due_ms }).map_err(err)?,
            None => Vec::new(),
        };
        actions_to_py(py, &out)
    }

    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.snapshot())
    }

    fn query<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &spot_search::build_query(self.inner.tree()))
    }

    fn log(&self) -> Vec<String> {
        self.inner.log().to_vec()
    }
}

/// Replay a transcript file; returns log lines and expectation counts.
#[pyfunction]
#[pyo3(signature = (transcript, poi=None, templates=None))]
fn replay<'py>(
    py: Python<'py>,
    transcript: PathBuf,
    poi: Option<PathBuf>,
    templates: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let engine = orch::Engine::new(config(poi, templates, "stub")?).map_err(err)?;
    let mut session = engine.create_session_with_id("replay");
    let report = orch::replay_transcript(&transcript, &mut session).map_err(err)?;
    to_py(py, &report)
}

/// Ranked spots for a query dict with the category headings as keys.
#[pyfunction]
#[pyo3(signature = (query, limit=spot_search::DEFAULT_LIMIT, poi=None))]
fn search<'py>(
    py: Python<'py>,
    query: &Bound<'py, PyAny>,
    limit: usize,
    poi: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let query: SearchQuery = from_py(py, query)?;
    let db = match poi {
        Some(p) => spot_search::load_spot_database(&p).map_err(err)?,
        None => SpotDatabase::builtin(),
    };
    let hits = spot_search::search_spots(&query, &db, limit);
    to_py(py, &orch::RankedSpot::from_hits(&hits))
}

#[pyfunction]
fn segment_into_chunks(response: &str) -> Vec<String> {
    dialogue_policy::segment_into_chunks(response)
}

#[pyfunction]
fn join_chunks(chunks: Vec<String>) -> String {
    dialogue_policy::join_chunks(&chunks)
}

/// The offline voice-action rule: `(action, backchannel or None)`.
#[pyfunction]
#[pyo3(signature = (partial, is_final=false, tokens_since_action=0))]
fn rule_voice_action(partial: &str, is_final: bool, tokens_since_action: usize) -> (String, Option<String>) {
    let p = voice_action::rule_proposal(partial, is_final, tokens_since_action, &VoiceConfig::default());
    (p.action.label().to_string(), p.backchannel)
}

/// Wraps a Python callable `text -> (expression, motion)`.
fn python_classifier(callable: Py<PyAny>) -> FnClassifier {
    FnClassifier::new(move |text| {
        Python::attach(|py| {
            let (e, m): (String, String) = callable
                .call1(py, (text,))
                .and_then(|r| r.extract(py))
                .map_err(|e| e.to_string())?;
            Ok((e.parse::<Expression>()?, m.parse::<Motion>()?))
        })
    })
}

fn classifier_for(callable: Option<Py<PyAny>>) -> Box<dyn ExpressionMotionClassifier> {
    match callable {
        Some(c) => Box::new(python_classifier(c)),
        None => Box::new(RuleClassifier),
    }
}

/// `(expression, motion)` for an utterance. A failing `classifier` falls
/// back to the keyword rules.
#[pyfunction]
#[pyo3(signature = (utterance, classifier=None))]
fn classify(utterance: &str, classifier: Option<Py<PyAny>>) -> PyResult<(String, String)> {
    let c = classifier_for(classifier);
    let (e, m) = expression_motion::classify(utterance, c.as_ref()).map_err(err)?;
    Ok((e.label().to_string(), m.label().to_string()))
}

/// Accuracy pair over `(text, expression, motion)` triples.
#[pyfunction]
#[pyo3(signature = (labelled, classifier=None))]
fn evaluate_classifier(labelled: Vec<(String, String, String)>, classifier: Option<Py<PyAny>>) -> PyResult<(f64, f64)> {
    let items = labelled
        .iter()
        .map(|(t, e, m)| {
            AnnotatedUtterance::new(
                t,
                e.parse().map_err(|e: String| ClassifyError::Classifier(e))?,
                m.parse().map_err(|e: String| ClassifyError::Classifier(e))?,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let c = classifier_for(classifier);
    expression_motion::evaluate_classifier(c.as_ref(), &items).map_err(err)
}

#[pymodule]
fn flowdial(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Engine>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(segment_into_chunks, m)?)?;
    m.add_function(wrap_pyfunction!(join_chunks, m)?)?;
    m.add_function(wrap_pyfunction!(rule_voice_action, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_classifier, m)?)?;
    Ok(())
}
