use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dialogue_policy::DEFAULT_TOP_K;
use crate::llm_backend::{BackendConfig, BackendMode};
use crate::spot_search::DEFAULT_LIMIT;
use crate::voice_action::VoiceConfig;

/// Everything needed to build an [`Engine`](super::Engine). Paths left
/// unset use the bundled resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Spot database in the tab-separated POI format.
    pub poi: Option<PathBuf>,
    /// Directory of per-act realization templates.
    pub templates: Option<PathBuf>,
    /// Directory of per-call-site prompt files.
    pub prompts: Option<PathBuf>,
    pub backend: BackendConfig,
    pub voice: VoiceConfig,
    /// Spots considered when enumerating acts.
    pub top_k: usize,
    /// Spots returned per search.
    pub limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            poi: None,
            templates: None,
            prompts: None,
            backend: BackendConfig::stub(),
            voice: VoiceConfig::default(),
            top_k: DEFAULT_TOP_K,
            limit: DEFAULT_LIMIT,
        }
    }
}

impl EngineConfig {
    pub fn with_poi(mut self, path: impl Into<PathBuf>) -> Self {
        self.poi = Some(path.into());
        self
    }

    pub fn with_mode(mut self, mode: BackendMode) -> Self {
        self.backend = match mode {
            BackendMode::Stub => BackendConfig::stub(),
            BackendMode::Live => BackendConfig::from_env(BackendMode::Live),
        };
        self
    }
}
