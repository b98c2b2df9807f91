use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use rand::Rng;
use reqwest::StatusCode;
use serde_json::Value;
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use super::{parse_completion, ChatProvider, ChatRequest, ChatResponse, ProviderError};

pub const ENV_API_KEY: &str = "INTERACT_API_KEY";
pub const ENV_BASE_URL: &str = "INTERACT_BASE_URL";

#[derive(Clone)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key: String,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
    pub timeout: Duration,
    pub max_concurrent: usize,
    /// Models allowed to receive image parts.
    pub vision_models: BTreeSet<String>,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("max_retries", &self.max_retries)
            .field("backoff_base", &self.backoff_base)
            .field("timeout", &self.timeout)
            .field("max_concurrent", &self.max_concurrent)
            .field("vision_models", &self.vision_models)
            .finish()
    }
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        ProviderConfig {
            base_url: base_url.into(),
            api_key: api_key.into(),
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(30),
            timeout: Duration::from_secs(120),
            max_concurrent: 8,
            vision_models: BTreeSet::new(),
        }
    }

    /// Reads `INTERACT_API_KEY` and `INTERACT_BASE_URL`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let key = std::env::var(ENV_API_KEY)
            .map_err(|_| ProviderError::InvalidRequest(format!("{ENV_API_KEY} is not set")))?;
        let url = std::env::var(ENV_BASE_URL)
            .unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
        Ok(Self::new(url, key))
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Full-jitter delay before retry number `retry` (1-based).
    fn backoff(&self, retry: u32) -> Duration {
        let cap = self
            .backoff_base
            .saturating_mul(1u32 << retry.saturating_sub(1).min(20))
            .min(self.backoff_max);
        if cap.is_zero() {
            return cap;
        }
        rand::rng().random_range(Duration::ZERO..=cap)
    }
}

/// Chat-completions client with retries and an in-flight request limit.
pub struct HttpProvider {
    cfg: ProviderConfig,
    client: reqwest::Client,
    limiter: Semaphore,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        if cfg.max_concurrent == 0 {
            return Err(ProviderError::InvalidRequest("max_concurrent must be at least 1".into()));
        }
        let client = reqwest::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider {
            limiter: Semaphore::new(cfg.max_concurrent),
            cfg,
            client,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    async fn attempt(&self, body: &Value) -> Result<ChatResponse, Attempt> {
        let _permit = self.limiter.acquire().await.expect("limiter never closes");
        let resp = self
            .client
            .post(self.cfg.endpoint())
            .bearer_auth(&self.cfg.api_key)
            .json(body)
            .send()
            .await
            .map_err(|e| Attempt::Retry(ProviderError::Transport(e.to_string())))?;
        let status = resp.status();
        let text = resp
            .text()
            .await
            .map_err(|e| Attempt::Retry(ProviderError::Transport(e.to_string())))?;
        if !status.is_success() {
            let err = ProviderError::Api {
                status: status.as_u16(),
                body: text.chars().take(2048).collect(),
            };
            return Err(if is_retryable(status) {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let json: Value = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(ProviderError::Content(format!("invalid JSON: {e}"))))?;
        let (text, usage) = parse_completion(&json).map_err(Attempt::Fatal)?;
        Ok(ChatResponse {
            text,
            usage,
            attempts: 0,
        })
    }
}

enum Attempt {
    Retry(ProviderError),
    Fatal(ProviderError),
}

fn is_retryable(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}

#[async_trait]
impl ChatProvider for HttpProvider {
    async fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        req.validate()?;
        if req.has_image() && !self.cfg.vision_models.contains(&req.model_id) {
            return Err(ProviderError::Content(format!(
                "model {} is not declared vision-capable",
                req.model_id
            )));
        }
        let body = req.wire_body();
        let mut attempt = 1;
        loop {
            match self.attempt(&body).await {
                Ok(mut resp) => {
                    resp.attempts = attempt;
                    debug!(model = %req.model_id, purpose = %req.purpose, attempt, "chat ok");
                    return Ok(resp);
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    if attempt > self.cfg.max_retries {
                        return Err(e);
                    }
                    let delay = self.cfg.backoff(attempt);
                    warn!(model = %req.model_id, attempt, error = %e, ?delay, "retrying chat request");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
            }
        }
    }
}
