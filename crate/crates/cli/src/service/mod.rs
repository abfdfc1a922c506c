//! HTTP API behind the triage UI.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/api/predict` | multipart: `view_id`, `app_overview`, `user_task`, one or more `source` files, `screenshot` |
//! | GET | `/api/sessions` | ids of stored sessions |
//! | POST | `/api/sessions` | body: an issue report; answers 201 with the new session |
//! | GET | `/api/sessions/{id}` | report plus labels |
//! | PUT | `/api/sessions/{id}/labels/{ordinal}?overwrite=true` | body: `{"rater_id": "E1", "label": "A"}` |
//! | GET | `/api/sessions/{id}/metrics` | metrics report over the session's labels |
//!
//! Errors come back as `{"error": "...", "class": "..."}`.

mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::Utc;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::{ServeDir, ServeFile};
use tracing::{error, info};
use uxprobe_core::evaluation::{compute_metrics, MetricsOptions};
use uxprobe_core::gateway::GatewayError;
use uxprobe_core::image_prep::load_screenshot;
use uxprobe_core::pipeline::{ErrorClass, PredictError, Predictor};
use uxprobe_core::{
    AppContext, AssessmentLabel, IssueReport, SourceFile, ViewSource, ViewUnderTest, Violation,
};

pub use store::{LabelEntry, LabelOutcome, Session, SessionStore};

/// Screenshots of large tablets run to a few megabytes.
const UPLOAD_LIMIT_BYTES: usize = 32 * 1024 * 1024;

pub struct AppState {
    pub store: SessionStore,
    /// `Err` when no gateway could be set up, e.g. the credential variable is unset;
    /// predictions then fail with that error while everything else works.
    pub predictor: Result<Predictor, GatewayError>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    class: String,
    message: String,
    extra: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, class: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            class: class.to_string(),
            message: message.into(),
            extra: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "input", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        let message = message.into();
        error!(%message, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    fn invalid(violations: &[Violation]) -> Self {
        let text = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        let mut e = Self::bad_request(text);
        e.extra = Some(json!({ "violations": violations }));
        e
    }
}

impl From<PredictError> for ApiError {
    fn from(e: PredictError) -> Self {
        match (&e, e.class()) {
            (PredictError::InvalidInput(v), _) => ApiError::invalid(v),
            (PredictError::Gateway(g), _) => ApiError::new(StatusCode::BAD_GATEWAY, g.class_tag(), e.to_string()),
            (_, ErrorClass::Input) => ApiError::bad_request(e.to_string()),
            (_, class) => ApiError::new(StatusCode::BAD_GATEWAY, class.name(), e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message, "class": self.class });
        if let Some(serde_json::Value::Object(extra)) = self.extra {
            body.as_object_mut().expect("object").extend(extra);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/predict", post(predict))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/labels/{ordinal}", put(put_label))
        .route("/sessions/{id}/metrics", get(session_metrics))
        .layer(DefaultBodyLimit::max(UPLOAD_LIMIT_BYTES))
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match ui_dir {
        Some(dir) => {
            let index = ServeFile::new(dir.join("index.html"));
            app.fallback_service(ServeDir::new(dir).fallback(index))
        }
        None => app.route("/", get(placeholder)),
    }
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>uxprobe</title><h1>uxprobe service</h1>\
         <p>No UI assets configured. Start with <code>--ui-dir</code> to serve them; \
         the JSON API lives under <code>/api</code>.</p>",
    )
}

/// Runs until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn predict(State(state): State<Arc<AppState>>, mut form: Multipart) -> ApiResult<Json<IssueReport>> {
    let predictor = state
        .predictor
        .as_ref()
        .map_err(|e| ApiError::from(PredictError::Gateway(e.clone())))?;

    let mut view_id = None;
    let mut app_overview = None;
    let mut user_task = None;
    let mut files = Vec::new();
    let mut screenshot = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let text = || {
            String::from_utf8(bytes.to_vec())
                .map_err(|_| ApiError::invalid(&[Violation::new(&name, "must be UTF-8 text")]))
        };
        match name.as_str() {
            "view_id" => view_id = Some(text()?),
            "app_overview" => app_overview = Some(text()?),
            "user_task" => user_task = Some(text()?),
            "source" => {
                let path = file_name.unwrap_or_else(|| format!("source{}.swift", files.len() + 1));
                files.push(SourceFile::new(path, text()?));
            }
            "screenshot" => screenshot = Some(bytes.to_vec()),
            other => return Err(ApiError::bad_request(format!("unexpected field '{other}'"))),
        }
    }

    let mut missing = Vec::new();
    for (field, present) in [
        ("app_overview", app_overview.is_some()),
        ("user_task", user_task.is_some()),
        ("source", !files.is_empty()),
        ("screenshot", screenshot.is_some()),
    ] {
        if !present {
            missing.push(Violation::new(field, "missing from the form"));
        }
    }
    if !missing.is_empty() {
        return Err(ApiError::invalid(&missing));
    }
    let screenshot = load_screenshot(screenshot.unwrap_or_default())
        .map_err(|e| ApiError::invalid(&[Violation::new("screenshot", e.to_string())]))?;
    let view = ViewUnderTest {
        view_id: view_id.unwrap_or_else(|| "view".into()),
        context: AppContext::new(app_overview.unwrap_or_default(), user_task.unwrap_or_default()),
        source: ViewSource::new(files),
        screenshot,
    };
    Ok(Json(predictor.predict(&view, Utc::now()).await?))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "sessions": state.store.ids() }))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<IssueReport>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<(StatusCode, Json<Session>)> {
    let Json(report) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let violations = report.validate();
    if !violations.is_empty() {
        return Err(ApiError::invalid(&violations));
    }
    let session = state
        .store
        .create(report)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let shared = state
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session '{id}'")))?;
    let session = shared.lock().await.clone();
    Ok(Json(session))
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    rater_id: String,
    label: String,
}

#[derive(Debug, Default, Deserialize)]
struct LabelQuery {
    #[serde(default)]
    overwrite: bool,
}

async fn put_label(
    State(state): State<Arc<AppState>>,
    Path((id, ordinal)): Path<(String, u32)>,
    Query(query): Query<LabelQuery>,
    body: Result<Json<LabelBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Json<LabelEntry>> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let label = AssessmentLabel::from_code(&body.label).ok_or_else(|| {
        ApiError::invalid(&[Violation::new("label", format!("'{}' is not one of A, B, C, D", body.label))])
    })?;
    let rater = body.rater_id.trim();
    if rater.is_empty() {
        return Err(ApiError::invalid(&[Violation::new("rater_id", "must not be empty")]));
    }

    let shared = state
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session '{id}'")))?;
    let mut session = shared.lock().await;
    // Change a copy and persist it before the in-memory session sees the label.
    let mut next = session.clone();
    match next.set_label(ordinal, rater, label, query.overwrite) {
        LabelOutcome::UnknownOrdinal => Err(ApiError::not_found(format!(
            "session '{id}' has no issue {ordinal}"
        ))),
        LabelOutcome::Conflict(current) => {
            let mut e = ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                format!(
                    "rater '{rater}' already labelled issue {ordinal} as {}; pass overwrite=true to replace it",
                    current.label
                ),
            );
            e.extra = Some(json!({ "current": current }));
            Err(e)
        }
        LabelOutcome::Written(entry) => {
            if next != *session {
                state
                    .store
                    .persist(&next)
                    .await
                    .map_err(|e| ApiError::internal(e.to_string()))?;
                *session = next;
            }
            Ok(Json(entry))
        }
    }
}

async fn session_metrics(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<uxprobe_core::MetricsReport>> {
    let shared = state
        .store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no session '{id}'")))?;
    let table = shared.lock().await.assessment_table();
    let report = compute_metrics(&table, None, &MetricsOptions::default())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(report))
}
