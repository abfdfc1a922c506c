//! Model gateway: one interface, an HTTP chat-completions implementation and a
//! fixture-backed mock, interchangeable behind [`CompletionGateway`].

mod http;
mod mock;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::TokenUsage;
use crate::prompt::PromptBundle;

pub use http::{build_request_body, HttpGateway};
pub use mock::{FixtureEntry, FixtureFile, MockGateway, RecordingGateway};

/// Environment variable read for the API key unless configured otherwise.
pub const DEFAULT_CREDENTIAL_ENV: &str = "OPENAI_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4-turbo";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles on each further attempt.
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay after failed attempt number `attempt` (1-based). Non-decreasing in `attempt`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub endpoint_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    /// Upper bound on concurrent requests through one gateway.
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            model_id: DEFAULT_MODEL.to_string(),
            temperature: 0.2,
            max_output_tokens: 1024,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
            credential_env: DEFAULT_CREDENTIAL_ENV.to_string(),
            max_in_flight: 4,
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: String| Err(GatewayError::InvalidConfig(m));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature must be within 0..=2, got {}", self.temperature));
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive".into());
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be at least 1".into());
        }
        if self.timeout.is_zero() {
            return bad("timeout must be positive".into());
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Normal,
    Length,
    ContentFilter,
}

/// Assistant answer to one bundle. `raw_text` is present unless the provider filtered it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub raw_text: Option<String>,
    pub model_id: String,
    pub usage: Option<TokenUsage>,
    pub finish_reason: FinishReason,
    /// Number of HTTP attempts it took; 1 for the mock.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("provider refused the request on content-policy grounds: {message}")]
    ContentPolicyRefusal { message: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("provider returned HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("provider server error HTTP {status} after {attempts} attempts")]
    Server { status: u16, attempts: u32 },
    #[error("network error after {attempts} attempts: {message}")]
    Network { message: String, attempts: u32 },
    #[error("credential environment variable {0} is not set")]
    MissingCredential(String),
    #[error("no recorded response for bundle digest {0}")]
    MissingFixture(String),
    #[error("invalid gateway configuration: {0}")]
    InvalidConfig(String),
    #[error("fixture file error: {0}")]
    Fixture(String),
}

impl GatewayError {
    /// Stable tag for the error class, passed through by the HTTP service.
    pub fn class_tag(&self) -> &'static str {
        match self {
            GatewayError::Auth { .. } => "auth",
            GatewayError::RateLimited { .. } => "rate_limited",
            GatewayError::Timeout { .. } => "timeout",
            GatewayError::ContentPolicyRefusal { .. } => "content_policy",
            GatewayError::MalformedResponse(_) => "malformed_response",
            GatewayError::Http { .. } => "http",
            GatewayError::Server { .. } => "server",
            GatewayError::Network { .. } => "network",
            GatewayError::MissingCredential(_) => "missing_credential",
            GatewayError::MissingFixture(_) => "missing_fixture",
            GatewayError::InvalidConfig(_) => "config",
            GatewayError::Fixture(_) => "fixture",
        }
    }
}

/// Sends a prompt bundle to a model and returns the raw answer.
#[async_trait]
pub trait CompletionGateway: Send + Sync {
    fn model_id(&self) -> &str;

    async fn predict_raw(&self, bundle: &PromptBundle) -> Result<CompletionResult, GatewayError>;
}

/// SHA-256 over the system text, user text and image bytes, each length-prefixed.
pub fn bundle_digest(bundle: &PromptBundle) -> String {
    let mut hasher = Sha256::new();
    for part in [
        bundle.system_text.as_bytes(),
        bundle.user_text.as_bytes(),
        bundle.image.bytes.as_slice(),
    ] {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}
