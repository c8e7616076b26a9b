use normcase_core::{Diagnostic, ReasonerError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("missing or unknown credentials")]
    Unauthenticated,
    #[error("permission denied: {0}")]
    PermissionDenied(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("model is invalid")]
    InvalidModel(Vec<Diagnostic>),
    #[error("no active model")]
    NoActiveModel,
    #[error("case {0} is closed")]
    CaseClosed(String),
    #[error("{0}")]
    Conflict(String),
    #[error("the second approval must come from a different user than {0}")]
    SameApprover(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("case {case} is unavailable: {reason}")]
    Unavailable { case: String, reason: String },
    #[error("storage failure: {0}")]
    Storage(String),
}

impl ServiceError {
    /// Stable machine-readable code for the error body.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Unauthenticated => "unauthenticated",
            ServiceError::PermissionDenied(_) => "permission_denied",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::InvalidModel(_) => "invalid_model",
            ServiceError::NoActiveModel => "no_active_model",
            ServiceError::CaseClosed(_) => "case_closed",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::SameApprover(_) => "same_approver",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Unavailable { .. } => "case_unavailable",
            ServiceError::Storage(_) => "storage_error",
        }
    }
}

impl From<ReasonerError> for ServiceError {
    fn from(e: ReasonerError) -> Self {
        match e {
            ReasonerError::UnknownAct(a) => ServiceError::NotFound(format!("act `{a}`")),
            other => ServiceError::BadRequest(other.to_string()),
        }
    }
}
