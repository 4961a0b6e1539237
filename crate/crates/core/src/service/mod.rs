//! The pipeline as a service: upload sessions, integration, frame queries,
//! quality reports, filtering and export over HTTP.

mod app;
mod http;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use app::{
    parse_priority, select_rows, App, AppConfig, FilterResponse, FrameRows, Granularity,
    IntegrateResponse, SessionState, UploadSession,
};
pub use http::{router, serve};

use crate::pipeline::DiagnosticEntry;

/// Error body of every failed request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticEntry>,
}

impl ApiError {
    fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "bad_request", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(401, "unauthorized", "missing or wrong bearer token")
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "not_found", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(409, "conflict", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(422, "integration_failed", message)
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        Self::new(500, "internal", e.to_string())
    }

    pub fn with_diagnostics(mut self, diagnostics: Vec<DiagnosticEntry>) -> Self {
        self.diagnostics = diagnostics;
        self
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}
