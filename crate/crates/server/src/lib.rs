//! HTTP and WebSocket front end for engine sessions.
//!
//! Each session runs on its own thread, which owns the [`Session`] and
//! applies events strictly in arrival order. Voice-action backend calls run
//! on helper threads and re-enter the queue as events; silence timers are
//! kept by the session thread itself.

use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use tokio::sync::broadcast;

use flowdial_core::orchestrator::wire::{ClientMessage, ServerMessage};
use flowdial_core::orchestrator::{Engine, EngineEvent, Session};

/// Messages queued for a session thread.
enum Command {
    Event(EngineEvent),
    Shutdown,
}

struct SessionHandle {
    tx: mpsc::Sender<Command>,
    out: broadcast::Sender<String>,
    state: Arc<Mutex<serde_json::Value>>,
}

impl Drop for SessionHandle {
    fn drop(&mut self) {
        let _ = self.tx.send(Command::Shutdown);
    }
}

#[derive(Clone)]
pub struct AppState {
    engine: Engine,
    sessions: Arc<Mutex<HashMap<String, Arc<SessionHandle>>>>,
    ui_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(engine: Engine, ui_dir: Option<PathBuf>) -> Self {
        Self {
            engine,
            sessions: Arc::new(Mutex::new(HashMap::new())),
            ui_dir,
        }
    }

    fn create(&self) -> String {
        let session = self.engine.create_session();
        let id = session.id().to_string();
        let (tx, rx) = mpsc::channel();
        let (out, _) = broadcast::channel(1024);
        let state = Arc::new(Mutex::new(snapshot(&session)));
        let handle = Arc::new(SessionHandle {
            tx: tx.clone(),
            out: out.clone(),
            state: state.clone(),
        });
        std::thread::Builder::new()
            .name(id.clone())
            .spawn(move || run_session(session, rx, tx, out, state))
            .expect("spawn session thread");
        self.sessions.lock().unwrap().insert(id.clone(), handle);
        id
    }

    fn get(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }
}

fn snapshot(session: &Session) -> serde_json::Value {
    serde_json::to_value(session.snapshot()).unwrap_or(serde_json::Value::Null)
}

/// The per-session executor. Session time follows the clients' `t_ms`; a
/// wall-clock offset taken at each event lets silence timers fire on time.
fn run_session(
    mut session: Session,
    rx: mpsc::Receiver<Command>,
    tx: mpsc::Sender<Command>,
    out: broadcast::Sender<String>,
    state: Arc<Mutex<serde_json::Value>>,
) {
    let started = Instant::now();
    let wall_ms = || started.elapsed().as_millis() as i64;
    let mut offset: i64 = 0;
    loop {
        let wait = session
            .next_timer()
            .map(|(_, due)| Duration::from_millis((due as i64 + offset - wall_ms()).max(0) as u64));
        let cmd = match wait {
            Some(d) => match rx.recv_timeout(d) {
                Ok(c) => Some(c),
                Err(RecvTimeoutError::Timeout) => None,
                Err(RecvTimeoutError::Disconnected) => return,
            },
            None => match rx.recv() {
                Ok(c) => Some(c),
                Err(_) => return,
            },
        };
        let result = match cmd {
            Some(Command::Shutdown) => return,
            None => {
                let (kind, due_ms) = session.next_timer().expect("waited on a timer");
                session.handle_event(EngineEvent::Timer { kind, due_ms })
            }
            Some(Command::Event(event)) => {
                let t = match &event {
                    EngineEvent::Asr(e) => Some(e.timestamp_ms),
                    EngineEvent::Ack(e) => Some(e.timestamp_ms),
                    _ => None,
                };
                if let Some(t) = t {
                    offset = wall_ms() - t as i64;
                }
                match event {
                    EngineEvent::Asr(asr) if !asr.is_final => session.submit_partial(asr).map(|(actions, job)| {
                        let tx = tx.clone();
                        std::thread::spawn(move || {
                            let _ = tx.send(Command::Event(job.run()));
                        });
                        actions
                    }),
                    other => session.handle_event(other),
                }
            }
        };
        match result {
            Ok(actions) => {
                for a in &actions {
                    let _ = out.send(ServerMessage::from(a).to_line());
                }
            }
            Err(e) => tracing::warn!(session = session.id(), error = %e, "event rejected"),
        }
        *state.lock().unwrap() = snapshot(&session);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/ws", get(session_ws))
        .route("/ui", get(ui_index))
        .route("/ui/{*path}", get(ui_file))
        .with_state(state)
}

async fn healthz(State(app): State<AppState>) -> Json<serde_json::Value> {
    let n = app.sessions.lock().unwrap().len();
    Json(serde_json::json!({ "status": "ok", "sessions": n }))
}

async fn create_session(State(app): State<AppState>) -> (StatusCode, Json<serde_json::Value>) {
    let id = app.create();
    let ws = format!("/sessions/{id}/ws");
    (StatusCode::CREATED, Json(serde_json::json!({ "id": id, "ws": ws })))
}

async fn session_state(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match app.get(&id) {
        Some(h) => Json(h.state.lock().unwrap().clone()).into_response(),
        None => (StatusCode::NOT_FOUND, format!("no session `{id}`")).into_response(),
    }
}

async fn session_ws(State(app): State<AppState>, UrlPath(id): UrlPath<String>, ws: WebSocketUpgrade) -> Response {
    match app.get(&id) {
        Some(h) => ws.on_upgrade(move |socket| serve_socket(socket, id, h)),
        None => (StatusCode::NOT_FOUND, format!("no session `{id}`")).into_response(),
    }
}

async fn serve_socket(socket: WebSocket, id: String, handle: Arc<SessionHandle>) {
    let (mut sink, mut stream) = socket.split();
    let mut rx = handle.out.subscribe();
    let writer = tokio::spawn(async move {
        loop {
            match rx.recv().await {
                Ok(line) => {
                    if sink.send(Message::Text(format!("{line}\n").into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => tracing::warn!(skipped = n, "slow client"),
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let event = ClientMessage::parse(line).and_then(|m| {
                if m.session != id {
                    tracing::warn!(session = %id, got = %m.session, "message for another session");
                }
                m.into_event()
            });
            match event {
                Ok(ev) => {
                    let _ = handle.tx.send(Command::Event(ev));
                }
                Err(e) => tracing::warn!(session = %id, error = %e, "bad client message"),
            }
        }
    }
    writer.abort();
}

const PLACEHOLDER_UI: &str = "<!doctype html><title>flowdial</title><p>No console bundle configured. Start the server with <code>--ui &lt;dir&gt;</code>.</p>";

async fn ui_index(State(app): State<AppState>) -> Response {
    match &app.ui_dir {
        Some(dir) => serve_file(dir, "index.html").await,
        None => Html(PLACEHOLDER_UI).into_response(),
    }
}

async fn ui_file(State(app): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    match &app.ui_dir {
        Some(dir) => serve_file(dir, &path).await,
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn serve_file(dir: &Path, rel: &str) -> Response {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::BAD_REQUEST.into_response();
    }
    let path = dir.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
