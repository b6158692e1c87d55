use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{EngineConfig, Session};
use crate::common_ground::{stub_extract_rule, stub_filter_rule, Grounder, Lexicon};
use crate::dialogue_policy::{stub_realize_rule, stub_select_rule, PolicyError, TemplateSet};
use crate::expression_motion::{ExpressionMotionClassifier, RuleClassifier};
use crate::llm_backend::{
    call_site, BackendError, BackendMode, ConfigError, HttpBackend, LlmBackend, PromptSet, StubBackend, TemplateError,
};
use crate::spot_search::{load_spot_database, LoadError, SpotDatabase};
use crate::voice_action::{stub_voice_rule, SequenceError, VoiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("spot database: {0}")]
    Poi(#[from] LoadError),
    #[error("templates: {0}")]
    Templates(#[from] PolicyError),
    #[error("prompts: {0}")]
    Prompts(#[from] TemplateError),
    #[error("backend config: {0}")]
    Config(#[from] ConfigError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("event for session `{got}` sent to session `{expected}`")]
    WrongSession { expected: String, got: String },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// Immutable pieces shared by every session.
pub struct Resources {
    pub config: EngineConfig,
    pub db: Arc<SpotDatabase>,
    pub lexicon: Arc<Lexicon>,
    pub grounder: Grounder,
    pub prompts: PromptSet,
    pub templates: TemplateSet,
    pub backend: Arc<dyn LlmBackend>,
    pub classifier: Arc<dyn ExpressionMotionClassifier>,
}

impl std::fmt::Debug for Resources {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resources")
            .field("config", &self.config)
            .field("spots", &self.db.len())
            .field("mode", &self.backend.mode())
            .finish_non_exhaustive()
    }
}

/// A stub backend answering every call site with the engine's rules.
pub fn stub_backend(lexicon: Arc<Lexicon>, templates: TemplateSet, voice: VoiceConfig) -> StubBackend {
    StubBackend::new()
        .with_rule(call_site::EXTRACT_PREFERENCES, stub_extract_rule(lexicon.clone()))
        .with_rule(call_site::FILTER_ACCEPTED, stub_filter_rule(lexicon))
        .with_rule(call_site::SELECT_DA, stub_select_rule)
        .with_rule(call_site::REALIZE_RESPONSE, stub_realize_rule(templates))
        .with_rule(call_site::VOICE_ACTION, stub_voice_rule(voice))
}

/// Loads resources once and hands out sessions.
#[derive(Debug, Clone)]
pub struct Engine {
    resources: Arc<Resources>,
    next_id: Arc<AtomicU64>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        let lexicon = Arc::new(Lexicon::builtin());
        let backend: Option<Arc<dyn LlmBackend>> = None;
        Self::build(config, lexicon, backend)
    }

    /// Like [`new`](Self::new) but with a caller-supplied backend, whatever
    /// the configured mode.
    pub fn with_backend(config: EngineConfig, backend: Arc<dyn LlmBackend>) -> Result<Self, EngineError> {
        Self::build(config, Arc::new(Lexicon::builtin()), Some(backend))
    }

    fn build(
        config: EngineConfig,
        lexicon: Arc<Lexicon>,
        backend: Option<Arc<dyn LlmBackend>>,
    ) -> Result<Self, EngineError> {
        config.backend.validate()?;
        let db = match &config.poi {
            Some(path) => load_spot_database(path)?,
            None => SpotDatabase::builtin(),
        };
        let templates = match &config.templates {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin(),
        };
        let prompts = match &config.prompts {
            Some(dir) => PromptSet::load_dir(dir)?,
            None => PromptSet::builtin(),
        };
        let backend = match backend {
            Some(b) => b,
            None if config.backend.mode == BackendMode::Stub => {
                Arc::new(stub_backend(lexicon.clone(), templates.clone(), config.voice.clone()))
            }
            None => Arc::new(HttpBackend::new(config.backend.clone())?),
        };
        let grounder = Grounder::new(lexicon.clone(), &prompts);
        Ok(Self {
            resources: Arc::new(Resources {
                config,
                db: Arc::new(db),
                lexicon,
                grounder,
                prompts,
                templates,
                backend,
                classifier: Arc::new(RuleClassifier),
            }),
            next_id: Arc::new(AtomicU64::new(1)),
        })
    }

    pub fn resources(&self) -> &Arc<Resources> {
        &self.resources
    }

    pub fn create_session(&self) -> Session {
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        Session::new(format!("session-{n}"), self.resources.clone())
    }

    pub fn create_session_with_id(&self, id: &str) -> Session {
        Session::new(id.to_string(), self.resources.clone())
    }
}

/// Build an engine from `config` and open one session.
pub fn create_session(config: EngineConfig) -> Result<Session, EngineError> {
    Ok(Engine::new(config)?.create_session())
}
