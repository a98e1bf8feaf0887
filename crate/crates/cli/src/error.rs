//! Error shape shared by HTTP responses and CLI stderr.

use std::fmt;
use std::process::ExitCode;

use intentmfg_core::graph::GraphError;
use intentmfg_core::model::{pointer_push, ParseError};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    UnknownGoal,
    Conflict,
    BackendFailure,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::BadRequest => 400,
            ErrorCode::UnknownGoal => 404,
            ErrorCode::Conflict => 409,
            ErrorCode::BackendFailure => 502,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    /// JSON pointer into the request document, when one location is at fault.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), path: None }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        let path = path.into();
        self.path = (!path.is_empty()).then_some(path);
        self
    }

    /// Re-roots the pointer under `prefix`, e.g. `/model`.
    pub fn under(mut self, prefix: &str) -> Self {
        self.path = Some(format!("{prefix}{}", self.path.as_deref().unwrap_or("")));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let path = e.path().to_string();
        ApiError::bad_request(e.to_string()).at(path)
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        let message = e.to_string();
        match e {
            GraphError::UnknownGoal(_) => ApiError::new(ErrorCode::UnknownGoal, message).at("/goal"),
            GraphError::UnknownConstraint { key, .. } | GraphError::ValueKindMismatch { key, .. } => {
                ApiError::bad_request(message).at(pointer_push("/action/constraint", &key))
            }
            GraphError::Io { .. } | GraphError::Malformed(_) | GraphError::Integrity(_) => {
                ApiError::new(ErrorCode::Internal, message)
            }
        }
    }
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    Backend = 3,
    Io = 4,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

/// A CLI failure: the exit status plus the error printed on stderr.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: ApiError,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { exit: Exit::Usage, error: ApiError::bad_request(message) }
    }

    pub fn validation(error: impl Into<ApiError>) -> Self {
        Self { exit: Exit::Validation, error: error.into() }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        Self { exit: Exit::Backend, error: ApiError::new(ErrorCode::BackendFailure, message) }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { exit: Exit::Io, error: ApiError::new(ErrorCode::Internal, message) }
    }
}

/// Graph errors from file access are I/O failures; everything else is a
/// validation failure.
impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io { .. } => Failure::io(e.to_string()),
            other => Failure::validation(other),
        }
    }
}
