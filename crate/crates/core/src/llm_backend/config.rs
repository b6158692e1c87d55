use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Live,
    Stub,
}

impl fmt::Display for BackendMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendMode::Live => "live",
            BackendMode::Stub => "stub",
        })
    }
}

impl FromStr for BackendMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(BackendMode::Live),
            "stub" => Ok(BackendMode::Stub),
            other => Err(ConfigError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown llm mode `{0}` (expected live or stub)")]
    UnknownMode(String),
    #[error("timeout must be positive")]
    ZeroTimeout,
    #[error("live mode requires {0}")]
    MissingLiveSetting(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    /// Path appended to `endpoint` for chat completions.
    pub base_path: String,
    /// Name of the environment variable holding the API key.
    pub credential_var: Option<String>,
    pub model: String,
    /// Per call site model, keyed by prompt name.
    pub model_overrides: BTreeMap<String, String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub mode: BackendMode,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            base_path: "/v1/chat/completions".to_string(),
            credential_var: None,
            model: String::new(),
            model_overrides: BTreeMap::new(),
            timeout_ms: 10_000,
            max_retries: 2,
            mode: BackendMode::Stub,
        }
    }
}

impl BackendConfig {
    pub fn stub() -> Self {
        Self::default()
    }

    /// Read `LLM_ENDPOINT`, `LLM_API_KEY_VAR` and `LLM_MODEL`.
    pub fn from_env(mode: BackendMode) -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let mut cfg = Self {
            mode,
            ..Self::default()
        };
        if let Some(endpoint) = var("LLM_ENDPOINT") {
            cfg.endpoint = endpoint;
        }
        cfg.credential_var = var("LLM_API_KEY_VAR");
        if let Some(model) = var("LLM_MODEL") {
            cfg.model = model;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout_ms == 0 {
            return Err(ConfigError::ZeroTimeout);
        }
        if self.mode == BackendMode::Live {
            if self.endpoint.is_empty() {
                return Err(ConfigError::MissingLiveSetting("an endpoint (LLM_ENDPOINT)"));
            }
            if self.model.is_empty() {
                return Err(ConfigError::MissingLiveSetting("a model (LLM_MODEL)"));
            }
        }
        Ok(())
    }

    pub fn model_for(&self, call_site: &str) -> &str {
        self.model_overrides
            .get(call_site)
            .map(String::as_str)
            .unwrap_or(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_needs_no_credential() {
        let cfg = BackendConfig::stub();
        assert!(cfg.credential_var.is_none());
        cfg.validate().unwrap();
    }

    #[test]
    fn live_requires_endpoint_and_model() {
        let cfg = BackendConfig {
            mode: BackendMode::Live,
            ..BackendConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::MissingLiveSetting(_))));
        let cfg = BackendConfig {
            timeout_ms: 0,
            ..BackendConfig::default()
        };
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroTimeout));
    }

    #[test]
    fn overrides_pick_model_per_call_site() {
        let mut cfg = BackendConfig {
            model: "gpt-4".into(),
            ..BackendConfig::default()
        };
        cfg.model_overrides.insert("voice_action".into(), "gpt-3.5-turbo".into());
        assert_eq!(cfg.model_for("voice_action"), "gpt-3.5-turbo");
        assert_eq!(cfg.model_for("select_da"), "gpt-4");
    }
}
