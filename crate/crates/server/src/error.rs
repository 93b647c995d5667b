use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use reviewlens_core::querylang::ParseError;
use serde_json::json;

/// Error body: `{"error": {"kind", "message", ...}}` with a 4xx/5xx status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub position: Option<usize>,
}

impl ApiError {
    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            kind: "not_found",
            message: message.into(),
            position: None,
        }
    }

    pub fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind,
            message: message.into(),
            position: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "internal",
            message: message.into(),
            position: None,
        }
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            kind: e.kind.as_str(),
            message: e.message,
            position: Some(e.position),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "kind": self.kind, "message": self.message });
        if let Some(p) = self.position {
            error["position"] = json!(p);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}
