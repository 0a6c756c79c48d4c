//! Async client for the forge service.

use base64::Engine;
use forge_api::{
    ActionRequest, ActionResponse, CreateSessionRequest, CreateSessionResponse, EpisodeRecord, EpisodeRequest,
    EpisodeResponse, EpisodeScore, ErrorBody, FoldRequest, FoldResponse, ObservationResponse, RenderRequest,
    RenderResponse, ScoreRequest, ScoreResponse, TargetsResponse, ValidateRequest, ValidateResponse,
};
use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service returned {status}: {} ({})", body.message, body.kind)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("bad image payload: {0}")]
    Image(#[from] base64::DecodeError),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForgeClient {
    base: String,
    http: reqwest::Client,
}

impl ForgeClient {
    /// `base` is the service root, e.g. `http://127.0.0.1:7878`.
    pub fn new(base: impl Into<String>) -> Self {
        ForgeClient {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn call<B: Serialize, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: Option<&B>,
    ) -> Result<T, ClientError> {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let body = serde_json::from_str(&text).unwrap_or(ErrorBody {
            kind: "http".to_owned(),
            message: text,
        });
        Err(ClientError::Api { status, body })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.call::<(), T>(Method::GET, path, None).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.call(Method::POST, path, Some(body)).await
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        let resp = self.http.get(format!("{}/health", self.base)).send().await?;
        resp.error_for_status()?;
        Ok(())
    }

    pub async fn targets(&self) -> Result<TargetsResponse, ClientError> {
        self.get("/targets").await
    }

    pub async fn create_session(&self, req: &CreateSessionRequest) -> Result<CreateSessionResponse, ClientError> {
        self.post("/sessions", req).await
    }

    pub async fn observation(&self, episode: &str) -> Result<ObservationResponse, ClientError> {
        self.get(&format!("/sessions/{episode}/observation")).await
    }

    pub async fn act(&self, episode: &str, raw: &str) -> Result<ActionResponse, ClientError> {
        let body = ActionRequest { raw: raw.to_owned() };
        self.post(&format!("/sessions/{episode}/actions"), &body).await
    }

    pub async fn session_score(&self, episode: &str) -> Result<EpisodeScore, ClientError> {
        self.get(&format!("/sessions/{episode}/score")).await
    }

    pub async fn session_record(&self, episode: &str) -> Result<EpisodeRecord, ClientError> {
        self.get(&format!("/sessions/{episode}/record")).await
    }

    /// Closes the session and returns its final record.
    pub async fn close_session(&self, episode: &str) -> Result<EpisodeRecord, ClientError> {
        self.call::<(), _>(Method::DELETE, &format!("/sessions/{episode}"), None)
            .await
    }

    pub async fn validate(&self, req: &ValidateRequest) -> Result<ValidateResponse, ClientError> {
        self.post("/validate", req).await
    }

    pub async fn render(&self, req: &RenderRequest) -> Result<RenderResponse, ClientError> {
        self.post("/render", req).await
    }

    /// Rendered PNG bytes.
    pub async fn render_png(&self, req: &RenderRequest) -> Result<Vec<u8>, ClientError> {
        let r = self.render(req).await?;
        Ok(decode_image(&r.png)?)
    }

    pub async fn fold(&self, req: &FoldRequest) -> Result<FoldResponse, ClientError> {
        self.post("/fold", req).await
    }

    pub async fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, ClientError> {
        self.post("/score", req).await
    }

    pub async fn episode(&self, req: &EpisodeRequest) -> Result<EpisodeResponse, ClientError> {
        self.post("/episodes", req).await
    }
}

pub fn decode_image(b64: &str) -> Result<Vec<u8>, base64::DecodeError> {
    base64::engine::general_purpose::STANDARD.decode(b64)
}
