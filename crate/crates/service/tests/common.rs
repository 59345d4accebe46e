#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use xlint_extract::{Extractor, ExtractorConfig};
use xlint_service::api::router_with_limit;
use xlint_service::{router, AppState, Store};

pub const CASE_1: &str = "There is no correlation between blood pressure attributions and serum triglycerides attributions";
pub const CASE_2: &str =
    "The number of patients with positive attribution for blood pressure is greater than the number with negative attribution";
pub const CASE_2_VERBATIM: &str = "Blood pressure contributes to increased diabetes progression in most patients";

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../extract/fixtures")
}

pub fn state(dir: &Path) -> AppState {
    let extractor = Extractor::new(ExtractorConfig::fixture(fixture_dir())).unwrap();
    AppState {
        store: Arc::new(Store::open(dir).unwrap()),
        extractor: Some(Arc::new(extractor)),
    }
}

pub fn app(dir: &Path) -> Router {
    router(state(dir))
}

pub fn app_with_limit(dir: &Path, limit: usize) -> Router {
    router_with_limit(state(dir), limit)
}

pub fn diabetes_csv() -> String {
    xlint_core::attribution::to_csv(&xlint_core::synthetic::diabetes_table(7))
}

pub async fn send(app: &Router, method: Method, uri: &str, content_type: &str, body: Vec<u8>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(Body::from(body))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Method::GET, uri, "application/json", Vec::new()).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    send(app, Method::POST, uri, "application/json", body.to_string().into_bytes()).await
}

pub fn diabetes_json() -> String {
    xlint_core::attribution::to_json(&xlint_core::synthetic::diabetes_table(7))
}

/// Uploads the described diabetes table; CSV would drop the descriptions the
/// sentences refer to.
pub async fn upload_diabetes(app: &Router) -> String {
    let (status, body) = send(app, Method::POST, "/datasets", "application/json", diabetes_json().into_bytes()).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["dataset_id"].as_str().unwrap().to_string()
}

pub async fn new_session(app: &Router, dataset_id: &str, spec: Option<Value>) -> String {
    let mut body = serde_json::json!({ "dataset_id": dataset_id });
    if let Some(spec) = spec {
        body["spec"] = spec;
    }
    let (status, body) = post(app, "/sessions", body).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

/// Adds an insight and returns its index.
pub async fn add(app: &Router, session: &str, text: &str, use_llm: bool) -> (StatusCode, Value) {
    post(
        app,
        &format!("/sessions/{session}/insights"),
        serde_json::json!({ "text": text, "use_llm": use_llm }),
    )
    .await
}

pub async fn check(app: &Router, session: &str, n: u64) -> (StatusCode, Value) {
    post(app, &format!("/sessions/{session}/insights/{n}/check"), Value::Null).await
}
