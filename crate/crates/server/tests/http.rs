use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;

use flowdial_core::orchestrator::wire::ServerMessage;
use flowdial_core::orchestrator::{Engine, EngineConfig};
use flowdial_server::{router, AppState};

const TEMPLE: &str =
    "Yes, I want to visit a temple where I can see beautiful autumn leaves and have a panoramic view of Kyoto.";

async fn start(ui: Option<std::path::PathBuf>) -> String {
    let engine = Engine::new(EngineConfig::default()).unwrap();
    let app = router(AppState::new(engine, ui));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("127.0.0.1:{}", addr.port())
}

async fn new_session(client: &reqwest::Client, addr: &str) -> String {
    let resp = client.post(format!("http://{addr}/sessions")).send().await.unwrap();
    assert_eq!(resp.status(), 201);
    let body: serde_json::Value = resp.json().await.unwrap();
    body["id"].as_str().unwrap().to_string()
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn connect(addr: &str, id: &str) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/ws")).await.unwrap();
    ws
}

async fn send(ws: &mut Ws, line: serde_json::Value) {
    ws.send(Message::Text(line.to_string().into())).await.unwrap();
}

/// Read messages until `stop` matches one or the timeout passes.
async fn collect_until(ws: &mut Ws, stop: impl Fn(&ServerMessage) -> bool) -> Vec<ServerMessage> {
    let mut out = Vec::new();
    let deadline = tokio::time::Instant::now() + Duration::from_secs(5);
    while let Ok(Some(Ok(msg))) = tokio::time::timeout_at(deadline, ws.next()).await {
        if let Message::Text(t) = msg {
            for line in t.lines() {
                let m = ServerMessage::parse(line).unwrap();
                let done = stop(&m);
                out.push(m);
                if done {
                    return out;
                }
            }
        }
    }
    out
}

#[tokio::test(flavor = "multi_thread")]
async fn healthz_and_unknown_session() {
    let addr = start(None).await;
    let client = reqwest::Client::new();
    let body: serde_json::Value = client
        .get(format!("http://{addr}/healthz"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(body["status"], "ok");
    let resp = client.get(format!("http://{addr}/sessions/nope/state")).send().await.unwrap();
    assert_eq!(resp.status(), 404);
    let ui = client.get(format!("http://{addr}/ui")).send().await.unwrap();
    assert_eq!(ui.status(), 200);
}

#[tokio::test(flavor = "multi_thread")]
async fn temple_turn_over_websocket() {
    let addr = start(None).await;
    let client = reqwest::Client::new();
    let id = new_session(&client, &addr).await;
    let mut ws = connect(&addr, &id).await;

    send(&mut ws, serde_json::json!({"type": "asr_partial", "session": id, "text": "Yes,", "seq": 1, "t_ms": 0})).await;
    let nod = collect_until(&mut ws, |m| m.kind_of == "nod").await;
    assert_eq!(nod.last().unwrap().kind_of, "nod");

    send(&mut ws, serde_json::json!({"type": "asr_final", "session": id, "text": TEMPLE, "seq": 2, "t_ms": 800})).await;
    let msgs = collect_until(&mut ws, |m| m.kind_of == "speak").await;
    let kinds: Vec<&str> = msgs.iter().map(|m| m.kind_of.as_str()).collect();
    assert_eq!(kinds, ["query_update", "results_update", "ground_update", "speak"]);
    assert_eq!(msgs[0].payload["Other"], serde_json::json!(["Kyoto"]));
    assert_eq!(msgs[3].payload["text"], "Alright,");
    assert!(msgs.windows(2).all(|w| w[1].idx == w[0].idx + 1));

    send(&mut ws, serde_json::json!({"type": "ack", "session": id, "kind": "user_nod", "seq": 0, "t_ms": 1500})).await;
    let next = collect_until(&mut ws, |m| m.kind_of == "speak").await;
    assert_eq!(next.last().unwrap().payload["text"], "I will try to search for temples in Kyoto for you.");

    let state: serde_json::Value = client
        .get(format!("http://{addr}/sessions/{id}/state"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(state["tree"]["active_path"], serde_json::json!(["root", "Sightseeing"]));
    assert_eq!(state["history"]["turns"].as_array().unwrap().len(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn silence_timeout_releases_chunk_without_ack() {
    let addr = start(None).await;
    let client = reqwest::Client::new();
    let id = new_session(&client, &addr).await;
    let mut ws = connect(&addr, &id).await;
    send(&mut ws, serde_json::json!({"type": "asr_final", "session": id, "text": TEMPLE, "seq": 1, "t_ms": 0})).await;
    let msgs = collect_until(&mut ws, |m| m.kind_of == "speak" && m.payload["chunk"] == 2).await;
    assert_eq!(msgs.last().unwrap().payload["chunk"], 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn two_sessions_do_not_share_output() {
    let addr = start(None).await;
    let client = reqwest::Client::new();
    let a = new_session(&client, &addr).await;
    let b = new_session(&client, &addr).await;
    assert_ne!(a, b);
    let mut wa = connect(&addr, &a).await;
    let mut wb = connect(&addr, &b).await;
    send(&mut wa, serde_json::json!({"type": "asr_partial", "session": a, "text": "Hello,", "seq": 1, "t_ms": 0})).await;
    let got_a = collect_until(&mut wa, |m| m.kind_of == "nod").await;
    assert!(got_a.iter().all(|m| m.session == a));
    let got_b = tokio::time::timeout(Duration::from_millis(300), wb.next()).await;
    assert!(got_b.is_err(), "session b received {got_b:?}");
}

#[tokio::test(flavor = "multi_thread")]
async fn ui_dir_is_served_without_traversal() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>console</p>").unwrap();
    let addr = start(Some(dir.path().to_path_buf())).await;
    let client = reqwest::Client::new();
    let body = client.get(format!("http://{addr}/ui")).send().await.unwrap().text().await.unwrap();
    assert_eq!(body, "<p>console</p>");
    let missing = client.get(format!("http://{addr}/ui/app.js")).send().await.unwrap();
    assert_eq!(missing.status(), 404);
}
