use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::ReviewError;
use crate::state::{AnnotationInput, CaseFilter, ReviewState};

type Shared = Arc<ReviewState>;

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::NotFound(_) => StatusCode::NOT_FOUND,
            ReviewError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ReviewError::Conflict { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(json!({"error": self.kind(), "message": self.to_string()}))).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct CasesQuery {
    status: Option<String>,
    annotator: Option<String>,
    limit: Option<usize>,
}

async fn list_cases(State(state): State<Shared>, Query(q): Query<CasesQuery>) -> Result<Response, ReviewError> {
    let filter = match q.status.as_deref() {
        Some(s) => s.parse()?,
        None => CaseFilter::All,
    };
    let cases = state.cases(filter, q.annotator.as_deref(), q.limit)?;
    Ok(Json(cases).into_response())
}

async fn get_case(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ReviewError> {
    Ok(Json(state.case(&id)?).into_response())
}

async fn post_annotation(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ReviewError> {
    if state.testset().get(&id).is_none() {
        return Err(ReviewError::NotFound(id));
    }
    let input: AnnotationInput = serde_json::from_slice(&body)
        .map_err(|e| ReviewError::Invalid(format!("bad annotation body: {e}")))?;
    let record = state.annotate(&id, input)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn progress(State(state): State<Shared>) -> Response {
    Json(state.progress()).into_response()
}

async fn agreement(State(state): State<Shared>) -> Response {
    Json(state.agreement()).into_response()
}

const PLACEHOLDER: &str = "<!doctype html>
<title>biascase review</title>
<h1>biascase review service</h1>
<p>No UI bundle is configured. The JSON API is available:</p>
<ul>
<li>GET /api/cases?status=pending&amp;annotator=NAME</li>
<li>GET /api/cases/ID</li>
<li>POST /api/cases/ID/annotation</li>
<li>GET /api/progress</li>
<li>GET /api/agreement</li>
</ul>
";

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER)
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

async fn static_file(root: Arc<PathBuf>, uri: Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    let rel = FsPath::new(if rel.is_empty() { "index.html" } else { rel });
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let mut path = root.join(rel);
    if path.is_dir() {
        path = path.join("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

/// API routes plus the UI: static files from `ui_dir` when it exists, a
/// placeholder page otherwise.
pub fn router(state: Arc<ReviewState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/cases", get(list_cases))
        .route("/api/cases/{id}", get(get_case))
        .route("/api/cases/{id}/annotation", axum::routing::post(post_annotation))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .with_state(state);
    match ui_dir.filter(|d| d.is_dir()) {
        Some(dir) => {
            let root = Arc::new(dir);
            api.fallback(move |uri: Uri| static_file(root.clone(), uri))
        }
        None => api.route("/", get(placeholder)),
    }
}
