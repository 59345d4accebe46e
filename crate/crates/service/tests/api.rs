mod common;

use axum::http::{Method, StatusCode};
use common::*;
use serde_json::{json, Value};
use xlint_core::vis::VisSpec;

fn scatter(dataset: &str) -> Value {
    let spec = VisSpec::scatter(
        dataset,
        ("bp", xlint_core::insight::Facet::Value),
        ("bp", xlint_core::insight::Facet::Attribution),
    );
    serde_json::to_value(spec).unwrap()
}

#[tokio::test]
async fn health_and_model_card() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(get(&app, "/health").await.0, StatusCode::OK);

    let (status, body) = send(&app, Method::POST, "/datasets", "text/csv", diabetes_csv().into_bytes()).await;
    assert_eq!(status, StatusCode::CREATED);
    let card = &body["model_card"];
    assert_eq!(card["n_rows"], 200);
    assert_eq!(card["features"].as_array().unwrap().len(), 10);
    for key in ["base_value", "prediction"] {
        assert!(card.get(key).is_some(), "{key} missing");
    }
    let id = body["dataset_id"].as_str().unwrap();
    let (status, again) = get(&app, &format!("/datasets/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, body);

    // Content addressed: the same table gets the same id, in either format.
    let (_, again) = send(&app, Method::POST, "/datasets", "text/csv", diabetes_csv().into_bytes()).await;
    assert_eq!(again["dataset_id"], body["dataset_id"]);
    let parsed: xlint_core::Table = xlint_core::attribution::parse_csv(&diabetes_csv()).unwrap();
    let json = xlint_core::attribution::to_json(&parsed);
    let (_, by_json) = send(&app, Method::POST, "/datasets", "application/json", json.into_bytes()).await;
    assert_eq!(by_json["dataset_id"], body["dataset_id"]);
}

#[tokio::test]
async fn malformed_uploads_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = send(&app, Method::POST, "/datasets", "text/csv", Vec::new()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad-request");

    let csv = diabetes_csv();
    let mut lines: Vec<&str> = csv.lines().collect();
    let second = lines[2];
    lines.push(second);
    let (status, body) = send(&app, Method::POST, "/datasets", "text/csv", lines.join("\n").into_bytes()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["message"].as_str().unwrap().to_lowercase().contains("duplicate"), "{body}");
}

#[tokio::test]
async fn oversize_uploads_get_413() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with_limit(dir.path(), 1024);
    let (status, _) = send(&app, Method::POST, "/datasets", "text/csv", diabetes_csv().into_bytes()).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn unknown_ids_get_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(get(&app, "/datasets/feedbeef").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/sessions/nope").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/sessions/..%2F..%2Fetc").await.0, StatusCode::NOT_FOUND);
    let (status, _) = post(&app, "/sessions", json!({"dataset_id": "0123456789abcdef"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;
    assert_eq!(check(&app, &s, 3).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn case_1_is_supported_with_a_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;

    let (status, added) = add(&app, &s, CASE_1, false).await;
    assert_eq!(status, StatusCode::CREATED, "{added}");
    assert_eq!(added["index"], 0);
    assert_eq!(added["source"], "grammar");
    assert_eq!(added["slots"], json!([]));
    assert_eq!(added["structured"]["type"], "correlation");
    assert!(added["rendered"]["segments"].as_array().is_some_and(|s| !s.is_empty()));

    let (status, checked) = check(&app, &s, 0).await;
    assert_eq!(status, StatusCode::OK, "{checked}");
    assert_eq!(checked["verdict"]["outcome"], "supported");
    let mapping = &checked["mapping"];
    assert_eq!(mapping["rule_id"], "correlation-scatter");
    assert_eq!(mapping["recommended_spec"]["mark"], "point");
    assert!(checked["views"]["recommended"].is_object());

    let (_, session) = get(&app, &format!("/sessions/{s}")).await;
    assert_eq!(session["insights"][0]["verdict"], checked["verdict"]);
    assert_eq!(session["insights"][0]["mapping"], checked["mapping"]);
    let (status, views) = get(&app, &format!("/sessions/{s}/insights/0/views")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(views, checked["views"]);
}

#[tokio::test]
async fn case_2_is_refuted_with_a_dual_beeswarm() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, Some(scatter(&ds))).await;

    let (status, added) = add(&app, &s, CASE_2, false).await;
    assert_eq!(status, StatusCode::CREATED, "{added}");
    let (status, checked) = check(&app, &s, 0).await;
    assert_eq!(status, StatusCode::OK, "{checked}");
    assert_eq!(checked["verdict"]["outcome"], "refuted");
    assert_eq!(checked["verdict"]["statistics"]["lhs"], 80.0);
    assert_eq!(checked["verdict"]["statistics"]["rhs"], 120.0);
    assert_eq!(checked["mapping"]["rule_id"], "count-dual-beeswarm");
    let values = checked["views"]["recommended"]["data"]["values"].as_array().unwrap();
    let side = |s: &str| values.iter().filter(|d| d["_side"] == s).count();
    assert_eq!((side("left"), side("right")), (120, 80));
}

#[tokio::test]
async fn gibberish_is_422_and_views_need_a_check() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;
    let (status, body) = add(&app, &s, "colorless green ideas", false).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "no-parse");

    add(&app, &s, CASE_1, false).await;
    let (status, body) = get(&app, &format!("/sessions/{s}/insights/0/views")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "not-checked");
}

#[tokio::test]
async fn open_slots_block_check_until_filled() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;

    let (status, added) = add(&app, &s, "bp matters for most patients", true).await;
    assert_eq!(status, StatusCode::CREATED, "{added}");
    assert_eq!(added["source"], "llm");
    assert!(added["trace_id"].is_string());
    let slots = added["slots"].as_array().unwrap().clone();
    assert!(!slots.is_empty());
    let slot_segments = added["rendered"]["segments"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["kind"] == "slot")
        .count();
    assert_eq!(slot_segments, slots.len());

    let (status, body) = check(&app, &s, 0).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "open-slots");
    assert_eq!(body["slots"], Value::Array(slots.clone()));

    let values: serde_json::Map<String, Value> = slots
        .iter()
        .map(|slot| {
            let value = match slot["candidates"].as_array() {
                Some(c) => c[0].clone(),
                None => json!(0.5),
            };
            (slot["path"].as_str().unwrap().to_string(), value)
        })
        .collect();
    let (status, filled) = post(
        &app,
        &format!("/sessions/{s}/insights/0/slots"),
        json!({ "values": values }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{filled}");
    assert_eq!(filled["slots"], json!([]));
    let (status, checked) = check(&app, &s, 0).await;
    assert_eq!(status, StatusCode::OK, "{checked}");

    let (status, body) = post(
        &app,
        &format!("/sessions/{s}/insights/0/slots"),
        json!({ "values": { "read.threshold": 0.9 } }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn failed_extractions_keep_their_trace() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;
    let (status, body) = add(&app, &s, "zebra quantum teapot", true).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["error"], "extraction-failed");
    let trace_id = body["trace_id"].as_str().unwrap();
    let (_, session) = get(&app, &format!("/sessions/{s}")).await;
    assert!(session["traces"][trace_id]["stage1"].is_object());
    assert_eq!(session["insights"], json!([]));

    // No fixture for this text: the provider is unavailable.
    let (status, body) = add(&app, &s, "an observation nobody recorded", true).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY, "{body}");
    assert_eq!(body["error"], "provider-unavailable");
}

#[tokio::test]
async fn spec_updates_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;
    let s = new_session(&app, &ds, None).await;
    let uri = format!("/sessions/{s}/spec");
    let (status, body) = send(&app, Method::PUT, &uri, "application/json", scatter(&ds).to_string().into_bytes()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["current_spec"]["mark"], "point");

    let mut bad = scatter(&ds);
    bad["encodings"]["x"]["field"] = json!({"kind": "column", "feature": "nope", "facet": "value"});
    let (status, body) = send(&app, Method::PUT, &uri, "application/json", bad.to_string().into_bytes()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["error"], "bad-spec");
    let (_, session) = get(&app, &format!("/sessions/{s}")).await;
    assert_eq!(session["current_spec"]["mark"], "point");
}

#[tokio::test]
async fn concurrent_sessions_do_not_interfere() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let ds = upload_diabetes(&app).await;

    let mut tasks = Vec::new();
    for i in 0..8 {
        let app = app.clone();
        let ds = ds.clone();
        tasks.push(tokio::spawn(async move {
            let s = new_session(&app, &ds, None).await;
            let text = if i % 2 == 0 { CASE_1 } else { CASE_2 };
            for _ in 0..3 {
                assert_eq!(add(&app, &s, text, false).await.0, StatusCode::CREATED);
            }
            for n in 0..3 {
                assert_eq!(check(&app, &s, n).await.0, StatusCode::OK);
            }
            (s, text)
        }));
    }
    // Many writers on one session: no update may be lost.
    let shared = new_session(&app, &ds, None).await;
    let mut writers = Vec::new();
    for _ in 0..16 {
        let app = app.clone();
        let shared = shared.clone();
        writers.push(tokio::spawn(async move { add(&app, &shared, CASE_1, false).await.0 }));
    }
    for w in writers {
        assert_eq!(w.await.unwrap(), StatusCode::CREATED);
    }
    for t in tasks {
        let (s, text) = t.await.unwrap();
        let (_, session) = get(&app, &format!("/sessions/{s}")).await;
        let insights = session["insights"].as_array().unwrap();
        assert_eq!(insights.len(), 3);
        assert!(insights.iter().all(|i| i["text"] == text && i["verdict"].is_object()));
    }
    let (_, session) = get(&app, &format!("/sessions/{shared}")).await;
    assert_eq!(session["insights"].as_array().unwrap().len(), 16);
}

#[tokio::test]
async fn responses_match_the_published_shapes() {
    use xlint_service::api::{CheckResponse, DatasetResponse, ErrorBody, InsightResponse};
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, body) = send(&app, Method::POST, "/datasets", "application/json", diabetes_json().into_bytes()).await;
    let parsed: DatasetResponse = serde_json::from_value(body.clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), body);

    let s = new_session(&app, &parsed.dataset_id, None).await;
    let (_, added) = add(&app, &s, CASE_1, false).await;
    let parsed: InsightResponse = serde_json::from_value(added.clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), added);
    let (_, checked) = check(&app, &s, 0).await;
    let parsed: CheckResponse = serde_json::from_value(checked.clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), checked);
    let (_, err) = add(&app, &s, "", false).await;
    let parsed: ErrorBody = serde_json::from_value(err.clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), err);
}
