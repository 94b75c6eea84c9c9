//! HTTP routes over a shared [`Registry`].

use std::sync::Arc;

use arbiter_core::rule_lang::Diagnostic;
use arbiter_core::sbp::{ApplicationMetadata, Mode};
use arbiter_core::EvaluationError;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use crate::query::{run_query, QueryError, QueryRequest};
use crate::registry::{ApplicationRecord, RecordInfo, Registry, RegistryError, RegisterRequest};

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/applications", get(list_applications))
        .route("/applications/{id}", put(register_application))
        .route("/applications/{id}/metadata", get(metadata))
        .route("/applications/{id}/query", post(query))
        .with_state(registry)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), diagnostics: Vec::new() }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("application `{id}` is not registered"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let body = json!({ "error": self.code, "message": self.message, "diagnostics": self.diagnostics });
        (self.status, Json(body)).into_response()
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        let message = e.to_string();
        match e {
            RegistryError::InvalidId(_) => Self::new(StatusCode::BAD_REQUEST, "InvalidApplicationId", message),
            RegistryError::InvalidRequest => Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message),
            RegistryError::Invalid(diagnostics) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "InvalidSource",
                message,
                diagnostics,
            },
            RegistryError::NotFound(id) => Self::not_found(&id),
            RegistryError::Corrupt { .. } | RegistryError::Io { .. } => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", message)
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ApplicationSummary {
    #[serde(flatten)]
    pub info: RecordInfo,
    pub options: Vec<String>,
}

impl From<&ApplicationRecord> for ApplicationSummary {
    fn from(r: &ApplicationRecord) -> Self {
        ApplicationSummary { info: r.info.clone(), options: r.metadata.options.clone() }
    }
}

#[derive(Debug, Serialize)]
struct Registered {
    #[serde(flatten)]
    summary: ApplicationSummary,
    warnings: Vec<Diagnostic>,
}

#[derive(Debug, Serialize)]
struct MetadataBody<'a> {
    app_id: &'a str,
    revision: u64,
    mode: Mode,
    #[serde(flatten)]
    metadata: &'a ApplicationMetadata,
}

async fn list_applications(State(reg): State<Arc<Registry>>) -> Json<Vec<ApplicationSummary>> {
    Json(reg.list().iter().map(|r| ApplicationSummary::from(r.as_ref())).collect())
}

async fn register_application(
    State(reg): State<Arc<Registry>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Registered>, ApiError> {
    let req: RegisterRequest = parse_json(&body)?;
    let record = tokio::task::spawn_blocking(move || reg.register(&id, req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    tracing::info!(app_id = %record.info.app_id, revision = record.info.revision, "registered");
    Ok(Json(Registered { summary: ApplicationSummary::from(record.as_ref()), warnings: record.diagnostics.clone() }))
}

async fn metadata(State(reg): State<Arc<Registry>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let record = reg.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let body = MetadataBody {
        app_id: &record.info.app_id,
        revision: record.info.revision,
        mode: record.info.mode,
        metadata: &record.metadata,
    };
    Ok(Json(body).into_response())
}

async fn query(State(reg): State<Arc<Registry>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let record = reg.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let req: QueryRequest = parse_json(&body)?;
    let response = tokio::task::spawn_blocking(move || {
        run_query(&record.info.app_id, record.info.revision, &record.theory, &record.metadata, &req)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;
    match response {
        Ok(r) => Ok(Json(r).into_response()),
        Err(QueryError::InvalidContext(diagnostics)) => Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: diagnostics.first().map_or("InvalidContext", |d| code_name(&d.code)),
            message: "the query does not match the application's scenario elements".into(),
            diagnostics,
        }),
        Err(QueryError::Evaluation(EvaluationError::Ground(e))) => {
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "EvaluationError", e.to_string()))
        }
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())),
    }
}

fn code_name(code: &str) -> &'static str {
    match code {
        "UnknownScenarioElement" => "UnknownScenarioElement",
        "NumericElementAsFact" => "NumericElementAsFact",
        "UnknownOption" => "UnknownOption",
        _ => "InvalidContext",
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedRequest", e.to_string()))
}
