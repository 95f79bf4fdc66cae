//! HTTP surface under `/v1/`. Every handler is a thin wrapper around one
//! [`Workshop`] method, run on the blocking pool.

use axum::body::Body;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use codesign_core::prompts::{validate_prompt, ValidationContext};
use codesign_core::{AgentRole, PromptEdit, RegistrationPhase, ViewParams, Workshop};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::error::ApiError;
use crate::idempotency;

/// JSON body extractor whose rejections use the API error shape.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(rejection: JsonRejection) -> ApiError {
    ApiError::invalid_request(rejection.body_text())
}

fn query_rejection(rejection: QueryRejection) -> ApiError {
    ApiError::invalid_request(rejection.body_text())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserBody {
    pub username: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadyBody {
    pub username: String,
    #[serde(default = "yes")]
    pub ready: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageBody {
    pub username: String,
    pub content: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewRoundBody {
    pub username: String,
    pub from_round: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpertBody {
    pub role: String,
    pub phase: RegistrationPhase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotBody {
    pub username: String,
    pub view: ViewParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditsBody {
    pub edits: Vec<PromptEdit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageBody {
    pub username: String,
    pub prompt_set_id: String,
    #[serde(default)]
    pub source_artifact_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateBody {
    pub text: String,
    #[serde(default)]
    pub room_id: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SinceQuery {
    #[serde(default)]
    pub since_seq: u64,
}

/// Builds the router. `cors_origin` is an exact origin or `*`.
pub fn router(ws: Workshop, cors_origin: &str) -> Router {
    let origin = if cors_origin == "*" {
        AllowOrigin::from(Any)
    } else {
        match HeaderValue::from_str(cors_origin) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => AllowOrigin::list(Vec::<HeaderValue>::new()),
        }
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(idempotency::HEADER)]);

    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/rooms/{room_id}/join", post(join))
        .route("/v1/rooms/{room_id}/ready", post(ready))
        .route("/v1/rooms/{room_id}/messages", post(post_message))
        .route("/v1/rooms/{room_id}/rounds", post(new_round))
        .route("/v1/rooms/{room_id}/rounds/{round}/retry", post(retry_facilitator))
        .route("/v1/rooms/{room_id}/state", get(state))
        .route("/v1/rooms/{room_id}/experts", post(register_expert))
        .route("/v1/rooms/{room_id}/experts/{role}/query", post(query_expert))
        .route("/v1/rooms/{room_id}/snapshots", post(save_snapshot))
        .route("/v1/rooms/{room_id}/prompt-sets", post(generate_prompts))
        .route("/v1/prompt-sets/{id}", get(prompt_set))
        .route("/v1/prompt-sets/{id}/edits", post(edit_prompts))
        .route("/v1/rooms/{room_id}/images", post(generate_image))
        .route("/v1/rooms/{room_id}/artifacts", get(list_artifacts))
        .route("/v1/artifacts/{id}", get(artifact_bytes))
        .route("/v1/rooms/{room_id}/end", post(end_session))
        .route("/v1/rooms/{room_id}/export", get(export))
        .route("/v1/prompts/validate", post(validate))
        .layer(cors)
        .with_state(ws)
}

fn to_json<T: Serialize>(value: codesign_core::Result<T>) -> Result<Value, ApiError> {
    let value = value.map_err(ApiError::from)?;
    serde_json::to_value(value).map_err(|e| ApiError::from(codesign_core::Error::Storage(e.to_string())))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", e.to_string()))
}

/// Runs a state-changing operation under the request's idempotency key.
async fn mutate<B, T, F>(ws: Workshop, headers: &HeaderMap, path: String, body: &B, op: F) -> Response
where
    B: Serialize,
    T: Serialize,
    F: FnOnce(&Workshop) -> codesign_core::Result<T> + Send + 'static,
{
    let request_id = match headers.get(idempotency::HEADER).map(|v| v.to_str()) {
        None => None,
        Some(Ok(v)) => Some(v.to_string()),
        Some(Err(_)) => return ApiError::invalid_request("Idempotency-Key is not valid text").into_response(),
    };
    let fp = idempotency::fingerprint("POST", &path, &serde_json::to_value(body).unwrap_or(Value::Null));
    let outcome = blocking(move || idempotency::execute(&ws, request_id.as_deref(), &fp, || to_json(op(&ws)))).await;
    match outcome {
        Ok((status, body)) => (status, Json(body)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn read<T, F>(ws: Workshop, op: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Workshop) -> codesign_core::Result<T> + Send + 'static,
{
    match blocking(move || to_json(op(&ws))).await.and_then(|r| r) {
        Ok(body) => Json(body).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn join(State(ws): State<Workshop>, Path(room): Path<String>, headers: HeaderMap, ApiJson(b): ApiJson<UserBody>) -> Response {
    let path = format!("/v1/rooms/{room}/join");
    let user = b.username.clone();
    mutate(ws, &headers, path, &b, move |ws| ws.create_or_join_room(&user, &room)).await
}

async fn ready(State(ws): State<Workshop>, Path(room): Path<String>, headers: HeaderMap, ApiJson(b): ApiJson<ReadyBody>) -> Response {
    let path = format!("/v1/rooms/{room}/ready");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.set_ready(&room, &b.username, b.ready)).await
}

async fn post_message(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<MessageBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/messages");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.post_message(&room, &b.username, &b.content)).await
}

async fn new_round(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<NewRoundBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/rounds");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.start_new_round(&room, &b.username, b.from_round)).await
}

async fn retry_facilitator(
    State(ws): State<Workshop>,
    Path((room, round)): Path<(String, u32)>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<UserBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/rounds/{round}/retry");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.retry_facilitator(&room, &b.username, round)).await
}

async fn state(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    query: Result<Query<SinceQuery>, QueryRejection>,
) -> Response {
    let since = match query {
        Ok(Query(q)) => q.since_seq,
        Err(e) => return query_rejection(e).into_response(),
    };
    read(ws, move |ws| ws.get_room_state(&room, since)).await
}

async fn register_expert(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<ExpertBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/experts");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| {
        let role: AgentRole = b.role.parse()?;
        ws.register_expert(&room, role, b.phase)
    })
    .await
}

async fn query_expert(
    State(ws): State<Workshop>,
    Path((room, role)): Path<(String, String)>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<UserBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/experts/{role}/query");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| {
        let role: AgentRole = role.parse()?;
        ws.query_expert(&room, role, &b.username)
    })
    .await
}

async fn save_snapshot(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<SnapshotBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/snapshots");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.save_snapshot(&room, &b.username, &b.view)).await
}

async fn generate_prompts(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<UserBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/prompt-sets");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.generate_prompt_set(&room, &b.username)).await
}

async fn prompt_set(State(ws): State<Workshop>, Path(id): Path<String>) -> Response {
    read(ws, move |ws| ws.prompt_set(&id)).await
}

async fn edit_prompts(
    State(ws): State<Workshop>,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<EditsBody>,
) -> Response {
    let path = format!("/v1/prompt-sets/{id}/edits");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.edit_prompt_set(&id, &b.edits)).await
}

async fn generate_image(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<ImageBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/images");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| {
        ws.revise_image(&room, &b.username, &b.prompt_set_id, b.source_artifact_id.as_deref())
    })
    .await
}

async fn list_artifacts(State(ws): State<Workshop>, Path(room): Path<String>) -> Response {
    read(ws, move |ws| ws.list_artifacts(&room)).await
}

fn bytes_response(content_type: &'static str, disposition: Option<String>, bytes: Vec<u8>) -> Response {
    let mut resp = Response::new(Body::from(bytes));
    resp.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    if let Some(d) = disposition.and_then(|d| HeaderValue::from_str(&d).ok()) {
        resp.headers_mut().insert(header::CONTENT_DISPOSITION, d);
    }
    resp
}

async fn artifact_bytes(State(ws): State<Workshop>, Path(id): Path<String>) -> Response {
    match blocking(move || ws.artifact_bytes(&id)).await {
        Ok(Ok(bytes)) => bytes_response("image/png", None, bytes),
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn end_session(
    State(ws): State<Workshop>,
    Path(room): Path<String>,
    headers: HeaderMap,
    ApiJson(b): ApiJson<UserBody>,
) -> Response {
    let path = format!("/v1/rooms/{room}/end");
    let body = b.clone();
    mutate(ws, &headers, path, &body, move |ws| ws.end_session(&room, &b.username)).await
}

async fn export(State(ws): State<Workshop>, Path(room): Path<String>) -> Response {
    let name: String = room
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let result = blocking(move || ws.export_session(&room).and_then(|b| b.to_archive())).await;
    match result {
        Ok(Ok(bytes)) => bytes_response(
            "application/zip",
            Some(format!("attachment; filename=\"{name}-session.zip\"")),
            bytes,
        ),
        Ok(Err(e)) => ApiError::from(e).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn validate(State(ws): State<Workshop>, ApiJson(b): ApiJson<ValidateBody>) -> Response {
    read(ws, move |ws| {
        let usernames: Vec<String> = match &b.room_id {
            Some(room) => ws.room(room)?.participants.iter().map(|u| u.to_string()).collect(),
            None => Vec::new(),
        };
        let ctx = ValidationContext {
            usernames: &usernames,
            transcript: &[],
        };
        validate_prompt(&b.text, ws.grammar(), &ctx)
    })
    .await
}
