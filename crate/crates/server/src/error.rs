use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use forge_api::ErrorBody;
use forge_core::env::{EnvError, StepError};
use forge_core::fold::FoldError;
use forge_core::kernel::KernelError;
use forge_core::metrics::MetricsError;
use forge_core::render::RenderError;
use forge_core::taskgen::SequenceError;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn unknown_target(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_target", format!("no target `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            kind: self.kind.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<FoldError> for ApiError {
    fn from(e: FoldError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_fold", e.to_string())
    }
}

impl From<KernelError> for ApiError {
    fn from(e: KernelError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_pattern", e.to_string())
    }
}

impl From<RenderError> for ApiError {
    fn from(e: RenderError) -> Self {
        Self::internal(e.to_string())
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "metrics", e.to_string())
    }
}

impl From<EnvError> for ApiError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::TargetImport(k) => k.into(),
            EnvError::TargetNotFoldable(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "not_foldable", e.to_string())
            }
            EnvError::Render(r) => r.into(),
            EnvError::Metrics(m) => m.into(),
        }
    }
}

impl From<StepError> for ApiError {
    fn from(e: StepError) -> Self {
        let kind = match e {
            StepError::SessionClosed => "session_closed",
            StepError::BudgetExhausted => "budget_exhausted",
        };
        Self::new(StatusCode::CONFLICT, kind, e.to_string())
    }
}

impl From<SequenceError> for ApiError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::Script { .. } => Self::bad_request(e.to_string()),
            SequenceError::Base(k) => k.into(),
            SequenceError::Render(r) => r.into(),
            SequenceError::BaseNotFoldable(_) | SequenceError::InfeasiblePrefix { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "not_foldable", e.to_string())
            }
        }
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        Self::internal(e.to_string())
    }
}
