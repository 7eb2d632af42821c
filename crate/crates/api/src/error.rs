use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorCode {
    BadQuery,
    NotFound,
    AccessDenied,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadQuery => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::AccessDenied => StatusCode::FORBIDDEN,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn bad_query(message: impl Into<String>) -> Self {
        ApiError { code: ErrorCode::BadQuery, message: message.into(), detail: None }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError { code: ErrorCode::NotFound, message: message.into(), detail: None }
    }

    /// The cause goes to the log only; clients see a fixed message so that
    /// file-system paths never leave the server.
    pub fn internal(cause: impl std::fmt::Display) -> Self {
        log::error!("internal error: {cause}");
        ApiError { code: ErrorCode::Internal, message: "internal error".into(), detail: None }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(Envelope { schema_version: SCHEMA_VERSION, error: &self });
        (self.code.status(), body).into_response()
    }
}
