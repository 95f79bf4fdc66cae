use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use codesign_core::Error;
use serde::{Deserialize, Serialize};

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub retryable: bool,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            retryable: status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS,
            status: status.as_u16(),
        }
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

/// HTTP status class of each module error.
pub fn status_for(err: &Error) -> StatusCode {
    use Error::*;
    match err {
        InvalidUsername(_) | InvalidRoomId(_) | EmptyContent | EmptyText | InvalidViewParams(_)
        | IndexOutOfRange { .. } | InvalidRole(_) | UnknownAgentRole(_) | EmptyPromptSet
        | EmptyHistory | MalformedArchive(_) => StatusCode::BAD_REQUEST,
        UnknownUser(_) => StatusCode::FORBIDDEN,
        UnknownRoom(_) | UnknownPromptSet(_) | UnknownArtifact(_) | UnknownSnapshot(_) => StatusCode::NOT_FOUND,
        DuplicateUsername(_) | RoomClosed(_) | RoomFull { .. } | NotInLobby | RoomNotActive
        | AlreadyRegistered(_) | InvalidPhase(_) | AgentNotActive { .. } | NothingToRetry(_)
        | NoSourceImage => StatusCode::CONFLICT,
        FacilitatorUnavailable { .. } | Provider(_) | SceneProvider(_) | ImageProvider(_) => {
            StatusCode::BAD_GATEWAY
        }
        ConflictExhausted { .. } => StatusCode::SERVICE_UNAVAILABLE,
        Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        Self {
            code: err.code().to_string(),
            message: err.to_string(),
            retryable: err.retryable(),
            status: status_for(&err).as_u16(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
