//! HTTP routes. Every body is JSON; errors are `{error, message}` objects
//! with an optional `slots` list or `trace_id`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::cors::CorsLayer;
use xlint_core::attribution::load_table;
use xlint_core::grammar::{render, Vocabulary};
use xlint_core::insight::{set_slot, SlotStatus};
use xlint_core::vis::{compile, VisSpec};
use xlint_core::{Table, TableFormat};
use xlint_extract::{settle_document, interpret, ExtractError, Extractor, InterpretError};

use crate::card::ModelCard;
use crate::check::{check, compile_views, CheckError, CheckResult, CompiledViews};
use crate::store::{InsightRecord, Session, Store, StoreError};

pub const DEFAULT_BODY_LIMIT: usize = 50 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// Absent when no model provider is configured; `use_llm` requests then
    /// fail with 503.
    pub extractor: Option<Arc<Extractor>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<SlotStatus>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                message: message.into(),
                slots: None,
                trace_id: None,
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no {what} `{id}`"))
    }

    fn with_trace(mut self, trace_id: Option<String>) -> Self {
        self.body.trace_id = trace_id;
        self
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "store failure");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    router_with_limit(state, DEFAULT_BODY_LIMIT)
}

pub fn router_with_limit(state: AppState, body_limit: usize) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/:id", get(get_dataset))
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/spec", put(put_spec))
        .route("/sessions/:id/insights", post(add_insight))
        .route("/sessions/:id/insights/:n/slots", post(fill_slots))
        .route("/sessions/:id/insights/:n/check", post(check_insight))
        .route("/sessions/:id/insights/:n/views", get(get_views))
        .layer(DefaultBodyLimit::max(body_limit))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResponse {
    pub dataset_id: String,
    pub model_card: ModelCard,
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<TableFormat>,
}

async fn upload_dataset(
    State(state): State<AppState>,
    Query(query): Query<FormatQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetResponse>)> {
    let format = query.format.unwrap_or_else(|| {
        let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
        if content_type.contains("json") {
            TableFormat::Json
        } else if content_type.contains("csv") {
            TableFormat::Csv
        } else {
            TableFormat::detect(None, &body)
        }
    });
    let table: Table = load_table(&body[..], format).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let dataset_id = state.store.put_dataset(&table)?;
    tracing::info!(%dataset_id, rows = table.len(), "dataset stored");
    Ok((
        StatusCode::CREATED,
        Json(DatasetResponse {
            model_card: ModelCard::of(&table),
            dataset_id,
        }),
    ))
}

fn dataset(store: &Store, id: &str) -> ApiResult<Table> {
    store.dataset(id)?.ok_or_else(|| ApiError::not_found("dataset", id))
}

fn session(store: &Store, id: &str) -> ApiResult<Session> {
    store.session(id)?.ok_or_else(|| ApiError::not_found("session", id))
}

async fn get_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DatasetResponse>> {
    let table = dataset(&state.store, &id)?;
    Ok(Json(DatasetResponse {
        dataset_id: id,
        model_card: ModelCard::of(&table),
    }))
}

#[derive(Debug, Deserialize)]
struct NewSession {
    dataset_id: String,
    #[serde(default)]
    spec: Option<VisSpec>,
}

fn check_spec(spec: &VisSpec, table: &Table) -> ApiResult<()> {
    compile(spec, table)
        .map(drop)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad-spec", e.to_string()))
}

async fn create_session(
    State(state): State<AppState>,
    Json(body): Json<NewSession>,
) -> ApiResult<(StatusCode, Json<Session>)> {
    let table = dataset(&state.store, &body.dataset_id)?;
    let spec = body.spec.unwrap_or_else(|| VisSpec::heatmap(body.dataset_id.clone()));
    check_spec(&spec, &table)?;
    let session = Session::new(body.dataset_id, spec);
    state.store.save_session(&session)?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    Ok(Json(session(&state.store, &id)?))
}

async fn put_spec(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(spec): Json<VisSpec>,
) -> ApiResult<Json<Session>> {
    let _guard = state.store.lock(&id).await;
    let mut s = session(&state.store, &id)?;
    check_spec(&spec, &dataset(&state.store, &s.dataset_id)?)?;
    s.current_spec = spec;
    s.touch();
    state.store.save_session(&s)?;
    Ok(Json(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightResponse {
    pub index: usize,
    #[serde(flatten)]
    pub record: InsightRecord,
}

#[derive(Debug, Deserialize)]
struct NewInsight {
    text: String,
    #[serde(default)]
    use_llm: bool,
}

async fn add_insight(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<NewInsight>,
) -> ApiResult<(StatusCode, Json<InsightResponse>)> {
    let extractor = match (body.use_llm, &state.extractor) {
        (false, _) => None,
        (true, Some(x)) => Some(x.clone()),
        (true, None) => {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "llm-unavailable",
                "no model provider is configured",
            ))
        }
    };
    // Sessions are only read here; the lock is taken once the slow
    // extraction is done.
    let table = dataset(&state.store, &session(&state.store, &id)?.dataset_id)?;
    let features = table.features().to_vec();
    let text = body.text.clone();
    let outcome = tokio::task::spawn_blocking(move || interpret(&text, &features, extractor.as_deref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;

    let _guard = state.store.lock(&id).await;
    let mut s = session(&state.store, &id)?;
    let interpreted = match outcome {
        Ok(i) => i,
        Err(InterpretError::NoParse) => {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "no-parse",
                "the text is not a sentence of the controlled insight language",
            ))
        }
        Err(InterpretError::Extraction(e)) => {
            let trace_id = e.trace().cloned().map(|t| s.add_trace(t));
            if trace_id.is_some() {
                s.touch();
                state.store.save_session(&s)?;
            }
            let (status, code) = match e {
                ExtractError::ProviderUnavailable { .. } => (StatusCode::BAD_GATEWAY, "provider-unavailable"),
                ExtractError::EmptyText => (StatusCode::UNPROCESSABLE_ENTITY, "no-parse"),
                _ => (StatusCode::UNPROCESSABLE_ENTITY, "extraction-failed"),
            };
            return Err(ApiError::new(status, code, e.to_string()).with_trace(trace_id));
        }
    };
    let trace_id = interpreted.trace.clone().map(|t| s.add_trace(t));
    let record = InsightRecord {
        text: body.text,
        source: interpreted.source,
        structured: interpreted.document(),
        rendered: render(&interpreted.draft, &interpreted.slots, &Vocabulary::from_table(&table)),
        slots: interpreted.slots,
        trace_id,
        verdict: None,
        mapping: None,
    };
    s.insights.push(record.clone());
    s.touch();
    state.store.save_session(&s)?;
    Ok((
        StatusCode::CREATED,
        Json(InsightResponse {
            index: s.insights.len() - 1,
            record,
        }),
    ))
}

fn insight_mut(s: &mut Session, n: usize) -> ApiResult<&mut InsightRecord> {
    let id = s.id.clone();
    s.insights
        .get_mut(n)
        .ok_or_else(|| ApiError::not_found("insight", &format!("{id}/{n}")))
}

#[derive(Debug, Deserialize)]
struct SlotValues {
    values: BTreeMap<String, Value>,
}

async fn fill_slots(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
    Json(body): Json<SlotValues>,
) -> ApiResult<Json<InsightResponse>> {
    let _guard = state.store.lock(&id).await;
    let mut s = session(&state.store, &id)?;
    let table = dataset(&state.store, &s.dataset_id)?;
    let record = insight_mut(&mut s, n)?;
    let mut document = record.structured.clone();
    for (path, value) in body.values {
        if !record.slots.iter().any(|s| s.path == path) {
            return Err(ApiError::bad_request(format!("`{path}` is not an open slot")));
        }
        set_slot(&mut document, &path, value).map_err(|e| ApiError::bad_request(e.to_string()))?;
    }
    let (draft, _, slots) =
        settle_document(&document, table.features()).map_err(|e| ApiError::bad_request(e.to_string()))?;
    record.structured = draft.to_document();
    record.rendered = render(&draft, &slots, &Vocabulary::from_table(&table));
    record.slots = slots;
    record.verdict = None;
    record.mapping = None;
    let record = record.clone();
    s.touch();
    state.store.save_session(&s)?;
    Ok(Json(InsightResponse { index: n, record }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResponse {
    pub index: usize,
    #[serde(flatten)]
    pub result: CheckResult,
}

fn open_slots(slots: Vec<SlotStatus>) -> ApiError {
    let mut e = ApiError::new(
        StatusCode::CONFLICT,
        "open-slots",
        format!("{} slot(s) still need a value", slots.len()),
    );
    e.body.slots = Some(slots);
    e
}

async fn check_insight(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<Json<CheckResponse>> {
    let _guard = state.store.lock(&id).await;
    let mut s = session(&state.store, &id)?;
    let table = dataset(&state.store, &s.dataset_id)?;
    let spec = s.current_spec.clone();
    let record = insight_mut(&mut s, n)?;
    if !record.slots.is_empty() {
        return Err(open_slots(record.slots.clone()));
    }
    let (_, insight, slots) =
        settle_document(&record.structured, table.features()).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let insight = insight.ok_or_else(|| open_slots(slots))?;
    let result = check(&insight, &table, &spec).map_err(|e| match e {
        CheckError::Unbound(slots) => open_slots(slots),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "check-failed", other.to_string()),
    })?;
    record.verdict = Some(result.verdict.clone());
    record.mapping = Some(result.mapping.clone());
    s.touch();
    state.store.save_session(&s)?;
    Ok(Json(CheckResponse { index: n, result }))
}

async fn get_views(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
) -> ApiResult<Json<CompiledViews>> {
    let mut s = session(&state.store, &id)?;
    let table = dataset(&state.store, &s.dataset_id)?;
    let record = insight_mut(&mut s, n)?;
    let mapping = record.mapping.as_ref().ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "not-checked", "the insight has not been checked yet")
    })?;
    let views = compile_views(mapping, &table)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "check-failed", e.to_string()))?;
    Ok(Json(views))
}
