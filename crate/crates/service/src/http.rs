//! HTTP+JSON routes over [`CaseService`].

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

use normcase_core::lang::Literal;

use crate::error::ServiceError;
use crate::service::CaseService;
use crate::types::*;

pub type Shared = Arc<CaseService>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Unauthenticated => StatusCode::UNAUTHORIZED,
            ServiceError::PermissionDenied(_) => StatusCode::FORBIDDEN,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidModel(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NoActiveModel
            | ServiceError::CaseClosed(_)
            | ServiceError::Conflict(_)
            | ServiceError::SameApprover(_) => StatusCode::CONFLICT,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unavailable { .. } => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "code": self.code(), "message": self.to_string() });
        if let ServiceError::InvalidModel(diagnostics) = &self {
            body["diagnostics"] = json!(diagnostics);
        }
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

/// The user behind the request's bearer token.
pub struct Caller(pub UserAccount);

impl FromRequestParts<Shared> for Caller {
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ServiceError::Unauthenticated)?;
        state.authenticate(token.trim()).map(Caller)
    }
}

/// Runs blocking service work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/models", post(register_model).get(list_models))
        .route("/models/{vid}", get(get_model))
        .route("/config/active-model", put(set_active_model))
        .route("/config/four-eyes", put(set_four_eyes))
        .route("/cases", post(create_case).get(list_cases))
        .route("/cases/{id}", get(case_view))
        .route("/cases/{id}/facts", axum::routing::patch(update_fact))
        .route("/cases/{id}/acts", post(perform_act))
        .route("/cases/{id}/simulate", post(simulate))
        .route("/cases/{id}/trace", get(trace))
        .route("/cases/{id}/close", post(close_case))
        .route("/users", post(create_user))
        .route("/users/{id}/roles", post(update_roles))
        .route("/roles/{role}/permissions", put(set_role_permissions))
        .layer(CorsLayer::permissive())
        .layer(TraceLayer::new_for_http())
        .with_state(service)
}

#[derive(Deserialize)]
struct SourceBody {
    source: String,
}

/// Accepts the model either as raw text or as `{"source": ...}`.
async fn register_model(
    State(s): State<Shared>,
    Caller(user): Caller,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let source = if is_json {
        serde_json::from_slice::<SourceBody>(&body)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?
            .source
    } else {
        String::from_utf8(body.to_vec()).map_err(|_| ServiceError::BadRequest("model is not UTF-8".into()))?
    };
    let existed = {
        let s = Arc::clone(&s);
        let id = normcase_core::version_id(source.as_bytes());
        blocking(move || Ok(s.get_model(&id).is_ok())).await?
    };
    let version = blocking(move || s.register_model(&user, &source)).await?;
    let status = if existed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(version)).into_response())
}

async fn list_models(State(s): State<Shared>, _: Caller) -> ApiResult<Json<Vec<ModelSummary>>> {
    blocking(move || s.list_models()).await.map(Json)
}

async fn get_model(State(s): State<Shared>, _: Caller, Path(vid): Path<String>) -> ApiResult<Json<ModelVersion>> {
    blocking(move || s.get_model(&vid)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ActiveModelBody {
    version_id: String,
}

async fn set_active_model(
    State(s): State<Shared>,
    Caller(user): Caller,
    Json(body): Json<ActiveModelBody>,
) -> ApiResult<Json<serde_json::Value>> {
    blocking(move || {
        s.set_active_model(&user, &body.version_id)?;
        Ok(Json(json!({ "versionId": body.version_id })))
    })
    .await
}

#[derive(Deserialize)]
struct FourEyesBody {
    acts: BTreeSet<String>,
}

async fn set_four_eyes(
    State(s): State<Shared>,
    Caller(user): Caller,
    Json(body): Json<FourEyesBody>,
) -> ApiResult<Json<serde_json::Value>> {
    blocking(move || {
        s.set_four_eyes(&user, body.acts.clone())?;
        Ok(Json(json!({ "acts": body.acts })))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateCaseBody {
    client_ref: String,
}

async fn create_case(
    State(s): State<Shared>,
    Caller(user): Caller,
    Json(body): Json<CreateCaseBody>,
) -> ApiResult<(StatusCode, Json<CaseRecord>)> {
    let record = blocking(move || s.create_case(&user, &body.client_ref)).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn list_cases(
    State(s): State<Shared>,
    _: Caller,
    Query(filter): Query<CaseFilter>,
) -> ApiResult<Json<Vec<CaseRecord>>> {
    blocking(move || s.list_cases(&filter)).await.map(Json)
}

async fn case_view(State(s): State<Shared>, Caller(user): Caller, Path(id): Path<String>) -> ApiResult<Json<CaseView>> {
    blocking(move || s.case_view(&user, &id)).await.map(Json)
}

async fn update_fact(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    Json(update): Json<FactUpdate>,
) -> ApiResult<Json<CaseView>> {
    blocking(move || s.update_fact(&user, &id, &update)).await.map(Json)
}

async fn perform_act(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    Json(command): Json<ActCommand>,
) -> ApiResult<Response> {
    let outcome = blocking(move || s.perform_act(&user, &id, &command)).await?;
    Ok(match outcome {
        ActOutcome::Executed { view, report } => {
            (StatusCode::OK, Json(json!({ "view": view, "report": report }))).into_response()
        }
        ActOutcome::ConfirmationRequired { report } => (
            StatusCode::CONFLICT,
            Json(json!({
                "code": "confirmation_required",
                "message": format!("`{}` is {:?}; confirm to perform it anyway", report.status.act, report.status.status),
                "requiresConfirmation": true,
                "report": report,
            })),
        )
            .into_response(),
        ActOutcome::PendingApproval { first_approver } => (
            StatusCode::ACCEPTED,
            Json(json!({ "pendingApproval": true, "firstApprover": first_approver })),
        )
            .into_response(),
    })
}

#[derive(Deserialize)]
struct SimulateBody {
    act: String,
    #[serde(default)]
    actor: Option<Literal>,
    #[serde(default)]
    recipient: Option<Literal>,
}

async fn simulate(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    Json(body): Json<SimulateBody>,
) -> ApiResult<Json<normcase_core::WhatIfReport>> {
    blocking(move || s.simulate(&user, &id, &body.act, body.actor, body.recipient))
        .await
        .map(Json)
}

async fn trace(State(s): State<Shared>, _: Caller, Path(id): Path<String>) -> ApiResult<Json<Vec<TraceEntry>>> {
    blocking(move || s.trace(&id)).await.map(Json)
}

async fn close_case(State(s): State<Shared>, Caller(user): Caller, Path(id): Path<String>) -> ApiResult<Json<CaseRecord>> {
    blocking(move || s.close_case(&user, &id)).await.map(Json)
}

async fn create_user(
    State(s): State<Shared>,
    Caller(user): Caller,
    Json(account): Json<UserAccount>,
) -> ApiResult<(StatusCode, Json<UserAccount>)> {
    let created = blocking(move || s.create_user(&user, account)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct RolesBody {
    grant: BTreeSet<String>,
    revoke: BTreeSet<String>,
}

async fn update_roles(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(id): Path<String>,
    Json(body): Json<RolesBody>,
) -> ApiResult<Json<UserAccount>> {
    blocking(move || s.update_roles(&user, &id, &body.grant, &body.revoke))
        .await
        .map(Json)
}

async fn set_role_permissions(
    State(s): State<Shared>,
    Caller(user): Caller,
    Path(role): Path<String>,
    Json(permissions): Json<RolePermissions>,
) -> ApiResult<Json<RolePermissions>> {
    blocking(move || s.set_role_permissions(&user, &role, permissions))
        .await
        .map(Json)
}
