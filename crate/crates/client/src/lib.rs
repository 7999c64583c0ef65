//! Async client for the replacement service. Requests and responses are the
//! [`teamrep_core::wire`] types.

use reqwest::header::CONTENT_TYPE;
use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use teamrep_core::wire::{ErrorBody, NetworkStats, RecommendRequest, RecommendResponse, WhatIfRequest, WhatIfResponse};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error body.
    #[error("{} ({status}): {}", body.error, body.message)]
    Api { status: u16, body: ErrorBody },
    #[error("unexpected response body: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    /// Same convention as the CLI's local mode: 1 input error, 2 empty
    /// result, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Api { status: 409, .. } => 2,
            ClientError::Api { status: 503, .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Sends a request and returns the raw success body.
    async fn send(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> Result<String, ClientError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            req = req.header(CONTENT_TYPE, "application/json").body(body);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let text = resp.text().await?;
        if status == StatusCode::OK {
            return Ok(text);
        }
        let body = serde_json::from_str(&text).unwrap_or_else(|_| ErrorBody {
            error: "http".into(),
            message: text,
        });
        Err(ClientError::Api {
            status: status.as_u16(),
            body,
        })
    }

    async fn post<Req: Serialize>(&self, path: &str, req: &Req) -> Result<String, ClientError> {
        self.send(Method::POST, path, Some(serde_json::to_vec(req)?)).await
    }

    fn decode<T: DeserializeOwned>(text: &str) -> Result<T, ClientError> {
        Ok(serde_json::from_str(text)?)
    }

    pub async fn stats(&self) -> Result<NetworkStats, ClientError> {
        Self::decode(&self.stats_raw().await?)
    }

    pub async fn stats_raw(&self) -> Result<String, ClientError> {
        self.send(Method::GET, "/v1/network/stats", None).await
    }

    pub async fn recommend(&self, req: &RecommendRequest) -> Result<RecommendResponse, ClientError> {
        Self::decode(&self.recommend_raw(req).await?)
    }

    /// The response body exactly as the service sent it.
    pub async fn recommend_raw(&self, req: &RecommendRequest) -> Result<String, ClientError> {
        self.post("/v1/recommend", req).await
    }

    pub async fn whatif(&self, req: &WhatIfRequest) -> Result<WhatIfResponse, ClientError> {
        Self::decode(&self.whatif_raw(req).await?)
    }

    pub async fn whatif_raw(&self, req: &WhatIfRequest) -> Result<String, ClientError> {
        self.post("/v1/whatif", req).await
    }
}
