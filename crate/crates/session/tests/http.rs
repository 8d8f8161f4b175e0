mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::*;
use morai_core::agent::AgentKind;
use morai_core::{Level, TileManifest};
use morai_session::http::router;
use morai_session::log::{parse_jsonl, replay};
use morai_session::{ClockMode, SessionConfig, SessionManager, Templates};

fn app(dir: Option<&std::path::Path>) -> Router {
    let templates = Templates { cnn: None, markov: Some(markov_model().clone()) };
    let defaults = SessionConfig { agent: AgentKind::Markov, cap: 5, explanations: false, ..SessionConfig::default() };
    let manager =
        SessionManager::new(templates, defaults, dir.map(ToOwned::to_owned)).with_clock_mode(ClockMode::Logical);
    router(Arc::new(manager))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

async fn new_session(app: &Router, config: Value) -> String {
    let (status, v) = call_json(app, "POST", "/session", Some(json!({ "config": config }))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn full_protocol_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Some(dir.path()));
    let id = new_session(&app, json!({ "width": 120, "seed": 3 })).await;

    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/session/{id}/edits"),
        Some(json!({ "edits": [{ "kind": "addition", "x": 10, "y": 14, "tile": 0 }, { "kind": "addition", "x": 11, "y": 14, "tile": 0 }] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({ "ok": true, "turn_id": 0 }));

    let (status, v) = call_json(&app, "POST", &format!("/session/{id}/end-turn"), Some(json!({ "focus_x": 12 }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["turn_id"], 0);
    let additions = v["additions"].as_array().unwrap();
    assert!(!additions.is_empty());
    assert!(additions
        .iter()
        .all(|a| a["x"].is_u64() && a["y"].is_u64() && a["tile"].is_u64() && a["activation"].is_number()));
    assert_eq!(v["explanations"], json!([]));

    let (status, v) = call_json(&app, "POST", &format!("/session/{id}/remove-ai-turn"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["removed"].as_array().unwrap().len(), additions.len());
    let (status, v) = call_json(&app, "POST", &format!("/session/{id}/remove-ai-turn"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "nothing_to_remove");

    let (status, text) = call(&app, "GET", &format!("/session/{id}/level"), None).await;
    assert_eq!(status, StatusCode::OK);
    let level = Level::parse(&text, &TileManifest::builtin()).unwrap();
    assert_eq!(level.width(), 120);
    assert_eq!(level.occupied_count(), 2);

    let (status, text) = call(&app, "GET", &format!("/session/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(replay(&parse_jsonl(&text).unwrap()).unwrap(), level);

    let (status, v) =
        call_json(&app, "POST", &format!("/session/{id}/close"), Some(json!({ "reuse_ranking": 1 }))).await;
    assert_eq!(status, StatusCode::OK);
    let path = v["log_path"].as_str().unwrap();
    assert!(path.ends_with(&format!("{id}.jsonl")));
    let written = std::fs::read_to_string(path).unwrap();
    assert_eq!(written.lines().last().map(|l| l.contains("session_closed")), Some(true));

    let (status, v) =
        call_json(&app, "POST", &format!("/session/{id}/close"), Some(json!({ "reuse_ranking": null }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "session_closed");
    let (status, _) = call(&app, "GET", &format!("/session/{id}/level"), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn sessions_get_distinct_ids() {
    let app = app(None);
    let a = new_session(&app, json!({})).await;
    let b = new_session(&app, json!({})).await;
    assert_ne!(a, b);
    let (_, text) = call(&app, "GET", &format!("/session/{a}/log"), None).await;
    let records = parse_jsonl(&text).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].event_type(), "session_created");
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let app = app(None);
    let (status, v) = call_json(&app, "POST", "/session", Some(json!({ "config": { "width": 30 } }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_config");

    let (status, v) = call_json(
        &app,
        "POST",
        "/session",
        Some(json!({ "config": { "agent": "cnn", "checkpoint": "/nonexistent" } })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_checkpoint");

    let (status, _) = call_json(&app, "POST", "/session/nope/end-turn", Some(json!({ "focus_x": 0 }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = new_session(&app, json!({})).await;
    let (status, v) = call_json(
        &app,
        "POST",
        &format!("/session/{id}/edits"),
        Some(json!({ "edits": [{ "kind": "addition", "x": 1, "y": 14, "tile": 0 }, { "kind": "deletion", "x": 2, "y": 14, "tile": 0 }] })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "invalid_edit");
    let (_, text) = call(&app, "GET", &format!("/session/{id}/level"), None).await;
    assert_eq!(Level::parse(&text, &TileManifest::builtin()).unwrap().occupied_count(), 0);

    let (status, _) = call(
        &app,
        "POST",
        &format!("/session/{id}/edits"),
        Some(json!({ "edits": [{ "kind": "addition", "x": 1, "y": 14, "tile": 40 }] })),
    )
    .await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn version_endpoint_reports_the_protocol() {
    let app = app(None);
    let (status, v) = call_json(&app, "GET", "/version", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["protocol_version"], 1);
}
