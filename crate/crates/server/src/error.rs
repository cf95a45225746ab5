use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fluidc_agents::AgentError;
use fluidc_core::fchdl::FchdlError;
use fluidc_core::layout::LayoutError;
use fluidc_core::patterns::PatternError;
use fluidc_core::simulator::SimError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

/// Error body `{code, message, detail}` with its HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).unwrap_or(Value::Null);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn body(&self) -> Value {
        json!({"code": self.code, "message": self.message, "detail": self.detail})
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

impl From<FchdlError> for ApiError {
    fn from(e: FchdlError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "syntax_error", e.to_string()).with_detail(&e)
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::BadConfig(_) | SimError::BadDuration(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, "simulation_error", e.to_string()).with_detail(&e)
    }
}

impl From<PatternError> for ApiError {
    fn from(e: PatternError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "pattern_error", e.to_string()).with_detail(&e)
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::PlacementInfeasible { best } => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "placement_infeasible",
                "no overlap-free placement found",
            )
            .with_detail(&*best),
            LayoutError::BadConfig(_) => ApiError::bad_request(e.to_string()),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "layout_error", other.to_string()),
        }
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        use AgentError::*;
        let (status, code) = match &e {
            InvalidProjectName(_) | InvalidDocument { .. } | Config(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            UnknownDocument(_) => (StatusCode::NOT_FOUND, "not_found"),
            MissingDocument(_) => (StatusCode::UNPROCESSABLE_ENTITY, "missing_document"),
            Transport(_) | Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "agent_error"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

/// `Json` extractor whose rejections use the error body.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(rejection_error(rejection)),
        }
    }
}

fn rejection_error(r: JsonRejection) -> ApiError {
    ApiError::bad_request(r.body_text())
}
