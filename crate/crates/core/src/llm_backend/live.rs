use std::time::{Duration, Instant};

use serde_json::json;

use super::{finish, BackendConfig, BackendError, BackendMode, Bindings, CancelToken, CompletionResult, LlmBackend, PromptTemplate};

/// Chat-completion client for OpenAI-shaped HTTP endpoints.
#[derive(Debug)]
pub struct HttpBackend {
    config: BackendConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Done(String),
    Retry(BackendError),
    Fail(BackendError),
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!(
            "{}/{}",
            self.config.endpoint.trim_end_matches('/'),
            self.config.base_path.trim_start_matches('/')
        )
    }

    fn attempt(&self, template: &PromptTemplate, prompt: &str, attempts: u32) -> Attempt {
        let body = json!({
            "model": self.config.model_for(&template.name),
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(self.url()).json(&body);
        if let Some(var) = &self.config.credential_var {
            if let Ok(key) = std::env::var(var) {
                request = request.bearer_auth(key);
            }
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout(self.config.timeout_ms)),
            Err(e) => {
                return Attempt::Retry(BackendError::Transport {
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(BackendError::Transport {
                attempts,
                message: format!("HTTP {status}"),
            });
        }
        if !status.is_success() {
            return Attempt::Fail(BackendError::Transport {
                attempts,
                message: format!("HTTP {status}"),
            });
        }
        let payload: serde_json::Value = match response.json() {
            Ok(v) => v,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout(self.config.timeout_ms)),
            Err(e) => return Attempt::Fail(BackendError::Malformed(format!("response body: {e}"))),
        };
        match payload
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
        {
            Some(text) => Attempt::Done(text.to_string()),
            None => Attempt::Fail(BackendError::Malformed(
                "response lacks choices[0].message.content".into(),
            )),
        }
    }
}

impl LlmBackend for HttpBackend {
    fn mode(&self) -> BackendMode {
        BackendMode::Live
    }

    fn complete_cancellable(
        &self,
        template: &PromptTemplate,
        bindings: &Bindings,
        cancel: &CancelToken,
    ) -> Result<CompletionResult, BackendError> {
        let prompt = template.render(bindings)?;
        let started = Instant::now();
        let total = self.config.max_retries + 1;
        let mut last = BackendError::Transport {
            attempts: 0,
            message: "no attempt made".into(),
        };
        for attempt in 1..=total {
            if cancel.is_cancelled() {
                return Err(BackendError::Cancelled);
            }
            match self.attempt(template, &prompt, attempt) {
                Attempt::Done(text) => {
                    let latency = started.elapsed().as_millis() as u64;
                    return finish(template, text, latency, BackendMode::Live);
                }
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(err) => {
                    tracing::debug!(template = %template.name, attempt, error = %err, "llm call failed");
                    last = err;
                    if attempt < total {
                        std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
                    }
                }
            }
        }
        Err(match last {
            BackendError::Transport { message, .. } => BackendError::Transport {
                attempts: total,
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm_backend::OutputSchema;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    fn config(endpoint: String, retries: u32) -> BackendConfig {
        BackendConfig {
            endpoint,
            model: "test-model".into(),
            timeout_ms: 2_000,
            max_retries: retries,
            mode: BackendMode::Live,
            ..BackendConfig::default()
        }
    }

    /// Serves canned (status, body) replies in order and records request bodies.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), seen)
    }

    fn completion(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn choice_prompt() -> PromptTemplate {
        PromptTemplate::new("select_da", "Pick: {candidates}", OutputSchema::Fields(vec!["choice".into()]))
    }

    fn bindings() -> Bindings {
        let mut b = Bindings::new();
        b.insert("candidates".into(), "1. acknowledge".into());
        b
    }

    #[test]
    fn unreachable_endpoint_fails_after_all_retries() {
        // Bind then drop to get a port nothing listens on.
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let backend = HttpBackend::new(config(format!("http://127.0.0.1:{port}"), 2)).unwrap();
        let err = backend.complete(&choice_prompt(), &bindings()).unwrap_err();
        assert!(matches!(err, BackendError::Transport { attempts: 3, .. }), "{err:?}");
    }

    #[test]
    fn parses_chat_completion_and_sends_model() {
        let (url, seen) = serve(vec![(200, completion("choice: 1"))]);
        let backend = HttpBackend::new(config(url, 0)).unwrap();
        let result = backend.complete(&choice_prompt(), &bindings()).unwrap();
        assert_eq!(result.first("choice"), Some("1"));
        assert_eq!(result.mode, BackendMode::Live);
        let body: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["content"], "Pick: 1. acknowledge");
    }

    #[test]
    fn server_errors_are_retried() {
        let (url, seen) = serve(vec![(503, "{}".into()), (200, completion("choice: 1"))]);
        let backend = HttpBackend::new(config(url, 1)).unwrap();
        backend.complete(&choice_prompt(), &bindings()).unwrap();
        assert_eq!(seen.lock().unwrap().len(), 2);
    }

    #[test]
    fn client_errors_and_bad_payloads_are_not_retried() {
        let (url, _) = serve(vec![(400, "{}".into())]);
        let backend = HttpBackend::new(config(url, 3)).unwrap();
        let err = backend.complete(&choice_prompt(), &bindings()).unwrap_err();
        assert!(matches!(err, BackendError::Transport { attempts: 1, .. }));

        let (url, _) = serve(vec![(200, completion("no idea"))]);
        let backend = HttpBackend::new(config(url, 3)).unwrap();
        let err = backend.complete(&choice_prompt(), &bindings()).unwrap_err();
        assert!(matches!(err, BackendError::Malformed(_)));
    }
}
