use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use crate::wire::ErrorBody;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("invalid `{field}`: {message}")]
    BadRequest { field: String, message: String },
    #[error("no model loaded")]
    NoModel,
    /// Details stay in the server log under `error_id`.
    #[error("internal error {error_id}")]
    Internal { error_id: String },
}

impl ApiError {
    pub fn bad(field: &str, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Logs `detail` and returns an error that only exposes a fresh id.
    pub fn internal(detail: impl std::fmt::Display) -> Self {
        let error_id = uuid::Uuid::new_v4().to_string();
        tracing::error!(%error_id, "request failed: {detail}");
        ApiError::Internal { error_id }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::NoModel => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let body = match self {
            ApiError::BadRequest { field, message } => ErrorBody {
                error: "invalid_request".into(),
                message: format!("{field}: {message}"),
                field: Some(field),
                error_id: None,
            },
            ApiError::NoModel => ErrorBody {
                error: "model_unavailable".into(),
                field: None,
                message: "no model is loaded".into(),
                error_id: None,
            },
            ApiError::Internal { error_id } => ErrorBody {
                error: "internal".into(),
                field: None,
                message: format!("internal error, reference {error_id}"),
                error_id: Some(error_id),
            },
        };
        (status, Json(body)).into_response()
    }
}
