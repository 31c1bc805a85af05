use std::fmt;

use thiserror::Error;

/// What went wrong talking to the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiErrorKind {
    Unreachable,
    Timeout,
    /// Non-2xx status that is not a missing-model report.
    HttpStatus(u16),
    /// The server answered, but not in the shape the API promises.
    Protocol(String),
    ModelMissing,
}

impl fmt::Display for ApiErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApiErrorKind::Unreachable => f.write_str("server unreachable"),
            ApiErrorKind::Timeout => f.write_str("request timed out"),
            ApiErrorKind::HttpStatus(code) => write!(f, "HTTP {code}"),
            ApiErrorKind::Protocol(_) => f.write_str("protocol error"),
            ApiErrorKind::ModelMissing => f.write_str("model not found"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {message}")]
pub struct ApiError {
    pub kind: ApiErrorKind,
    pub message: String,
}

impl ApiError {
    pub fn new(kind: ApiErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn protocol(detail: impl Into<String>) -> Self {
        let detail = detail.into();
        Self::new(ApiErrorKind::Protocol(detail.clone()), detail)
    }

    pub fn unreachable(message: impl Into<String>) -> Self {
        Self::new(ApiErrorKind::Unreachable, message)
    }

    pub fn timeout(message: impl Into<String>) -> Self {
        Self::new(ApiErrorKind::Timeout, message)
    }

    pub fn model_missing(message: impl Into<String>) -> Self {
        Self::new(ApiErrorKind::ModelMissing, message)
    }

    /// Classifies a non-2xx reply. A 404, or an error body mentioning
    /// "not found", means the requested model is not available locally.
    pub fn from_status(code: u16, body: &str) -> Self {
        let message = serde_json::from_str::<serde_json::Value>(body)
            .ok()
            .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_owned))
            .unwrap_or_else(|| body.trim().to_owned());
        if code == 404 || message.to_ascii_lowercase().contains("not found") {
            return Self::model_missing(message);
        }
        let kind = if (200..300).contains(&code) {
            // Success codes carrying an error body are a protocol violation,
            // never an HttpStatus.
            ApiErrorKind::Protocol(message.clone())
        } else {
            ApiErrorKind::HttpStatus(code)
        };
        Self::new(kind, message)
    }

    pub fn is_timeout(&self) -> bool {
        self.kind == ApiErrorKind::Timeout
    }

    pub fn is_model_missing(&self) -> bool {
        self.kind == ApiErrorKind::ModelMissing
    }
}

impl From<reqwest::Error> for ApiError {
    fn from(e: reqwest::Error) -> Self {
        if e.is_timeout() {
            ApiError::timeout(e.to_string())
        } else if e.is_decode() || e.is_body() {
            ApiError::protocol(e.to_string())
        } else {
            ApiError::unreachable(e.to_string())
        }
    }
}
