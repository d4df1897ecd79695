use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use viewdisc::fixtures::{employee_query, write_employee_corpus};
use viewdisc::service::{run_pipeline, PipelineContext, RunConfig, SessionStore};
use viewdisc::{build_index, IndexConfig};
use viewdisc_cli::api::router;

struct Fixture {
    _dirs: (tempfile::TempDir, tempfile::TempDir),
    store: Arc<SessionStore>,
    cfg: RunConfig,
}

fn fixture() -> Fixture {
    let corpus = tempfile::tempdir().unwrap();
    write_employee_corpus(corpus.path()).unwrap();
    let idx = Arc::new(build_index(corpus.path(), IndexConfig::default()).unwrap());
    let data = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        max_hops: 1,
        ..RunConfig::default()
    };
    let store = Arc::new(SessionStore::open(data.path(), idx, cfg.clone()).unwrap());
    Fixture {
        _dirs: (corpus, data),
        store,
        cfg,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8_lossy(&bytes).into_owned();
    (status, serde_json::from_str(&text).unwrap_or(Value::Null), text)
}

async fn create_and_wait(app: &Router) -> (String, Value) {
    let (st, v, _) = call(
        app,
        "POST",
        "/api/v1/sessions",
        Some(json!({"attributes": ["employee", "address"], "tuples": [{"employee": "Raul CF"}]})),
    )
    .await;
    assert_eq!(st, StatusCode::ACCEPTED);
    let id = v["session_id"].as_str().unwrap().to_string();
    for _ in 0..500 {
        let (st, s, _) = call(app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
        assert_eq!(st, StatusCode::OK);
        if s["stage"] != "searching" && s["stage"] != "classifying" {
            return (id, s);
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("session {id} never finished");
}

#[tokio::test]
async fn session_round_trip() {
    let f = fixture();
    let app = router(f.store.clone());
    let (id, status) = create_and_wait(&app).await;
    assert_eq!(status["stage"], "awaiting_choice");
    assert_eq!(status["pending_views"].as_array().unwrap().len(), 3);
    assert!(status["timings"]["total"].as_f64().unwrap() >= 0.0);

    // The HTTP layer delegates: the same pipeline run gives the same counts.
    let direct = run_pipeline(f.store.index(), &employee_query(), &f.cfg, &PipelineContext::default(), false).unwrap();
    assert_eq!(status["counts"], serde_json::to_value(&direct.counts).unwrap());

    let (_, views, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}/views"), None).await;
    assert_eq!(views["views"].as_array().unwrap().len(), 3);
    assert!(views["views"][0]["provenance"].is_object());

    let (st, prompt, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}/prompt"), None).await;
    assert_eq!(st, StatusCode::OK);
    let prompt = &prompt["prompt"];
    assert_eq!(prompt["key"], "employee");
    let pid = prompt["prompt_id"].as_str().unwrap().to_string();
    let (keep, drop) = (prompt["left"].as_str().unwrap(), prompt["right"].as_str().unwrap());

    let (st, _, _) = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/choice"),
        Some(json!({"prompt_id": "p-stale", "chosen": keep})),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    let (st, _, _) = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/choice"),
        Some(json!({"prompt_id": pid, "chosen": "not-a-view"})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let (st, after, _) = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/choice"),
        Some(json!({"prompt_id": pid, "chosen": keep})),
    )
    .await;
    assert_eq!(st, StatusCode::OK);
    let pending: Vec<&str> = after["pending_views"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(!pending.contains(&drop));
    let (_, views, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}/views"), None).await;
    assert_eq!(views["views"].as_array().unwrap().len(), pending.len());

    // Resolve everything else, then a further choice has no prompt.
    loop {
        let (_, p, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}/prompt"), None).await;
        if p["prompt"].is_null() {
            break;
        }
        let (st, _, _) = call(
            &app,
            "POST",
            &format!("/api/v1/sessions/{id}/choice"),
            Some(json!({"prompt_id": p["prompt"]["prompt_id"], "chosen": p["prompt"]["left"]})),
        )
        .await;
        assert_eq!(st, StatusCode::OK);
    }
    let (_, s, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(s["stage"], "complete");
    let (st, _, _) = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/choice"),
        Some(json!({"prompt_id": pid, "skip": true})),
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);

    let only = s["pending_views"][0].as_str().unwrap();
    let (_, views, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}/views"), None).await;
    let rows = views["views"][0]["total_rows"].as_u64().unwrap();
    let (st, _, csv) = call(&app, "GET", &format!("/api/v1/sessions/{id}/export?view={only}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(csv.lines().count() as u64, rows + 1);
}

#[tokio::test]
async fn invalid_bodies_and_unknown_sessions() {
    let f = fixture();
    let app = router(f.store);
    let (st, v, _) = call(
        &app,
        "POST",
        "/api/v1/sessions",
        Some(json!({"attributes": ["employee"], "tuples": [{"salary": "10"}]})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("tuples[0].salary"));
    let (st, _, _) = call(&app, "POST", "/api/v1/sessions", Some(json!({"tuples": []}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    for path in ["", "/views", "/prompt", "/export"] {
        let (st, _, _) = call(&app, "GET", &format!("/api/v1/sessions/nope{path}"), None).await;
        assert_eq!(st, StatusCode::NOT_FOUND, "{path}");
    }
}

#[tokio::test]
async fn duplicate_submissions_are_independent() {
    let f = fixture();
    let app = router(f.store.clone());
    let (a, _) = create_and_wait(&app).await;
    let (b, _) = create_and_wait(&app).await;
    assert_ne!(a, b);
    assert_eq!(f.store.ids().len(), 2);
}

#[tokio::test]
async fn attribute_autocomplete() {
    let f = fixture();
    let app = router(f.store);
    let (st, v, _) = call(&app, "GET", "/api/v1/attributes?prefix=add", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["attributes"], json!(["address"]));
}
