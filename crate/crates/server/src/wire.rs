//! Request decoding, response encoding and error bodies. Bodies are TOML
//! unless the client asks for JSON through `Content-Type` or `Accept`.

use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use cloudsel::codes::ErrorCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const TOML_MEDIA_TYPE: &str = "application/toml";
pub const JSON_MEDIA_TYPE: &str = "application/json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

fn mentions_json(headers: &HeaderMap, name: header::HeaderName) -> bool {
    headers
        .get_all(name)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.to_ascii_lowercase().contains(JSON_MEDIA_TYPE))
}

impl Format {
    pub fn of_request(headers: &HeaderMap) -> Self {
        if mentions_json(headers, header::CONTENT_TYPE) {
            Format::Json
        } else {
            Format::Toml
        }
    }

    pub fn of_response(headers: &HeaderMap) -> Self {
        if mentions_json(headers, header::ACCEPT) {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

/// Error body. `code` is the command-line exit code of the same failure class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: u8,
    pub kind: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, ErrorCode::Input, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::Validation, message)
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code.exit_code(), kind: self.code, message: self.message.clone() }
    }
}

pub fn decode<T: DeserializeOwned>(headers: &HeaderMap, body: &[u8]) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::Validation, "request body is not UTF-8"))?;
    let parsed = match Format::of_request(headers) {
        Format::Json => serde_json::from_str(if text.trim().is_empty() { "{}" } else { text }).map_err(|e| e.to_string()),
        Format::Toml => toml::from_str(text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, ErrorCode::Validation, format!("invalid request body: {e}")))
}

pub fn encode<T: Serialize>(format: Format, status: StatusCode, value: &T) -> Response {
    let (media, text) = match format {
        Format::Json => (JSON_MEDIA_TYPE, serde_json::to_string_pretty(value).map_err(|e| e.to_string())),
        Format::Toml => (TOML_MEDIA_TYPE, toml::to_string_pretty(value).map_err(|e| e.to_string())),
    };
    match text {
        Ok(text) => (status, [(header::CONTENT_TYPE, HeaderValue::from_static(media))], text).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, format!("failed to encode response: {e}")).into_response(),
    }
}

/// Encodes either the value or the error in the client's preferred format.
pub fn reply<T: Serialize>(headers: &HeaderMap, status: StatusCode, result: Result<T, ApiError>) -> Response {
    let format = Format::of_response(headers);
    match result {
        Ok(v) => encode(format, status, &v),
        Err(e) => encode(format, e.status, &e.body()),
    }
}
