use std::sync::Arc;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use super::{CompletionGateway, CompletionResult, FinishReason, GatewayConfig, GatewayError};
use crate::model::TokenUsage;
use crate::prompt::PromptBundle;

/// Chat-completions wire body: one system message, then one user message carrying the
/// user text and the screenshot as a base64 data URL.
pub fn build_request_body(bundle: &PromptBundle, config: &GatewayConfig) -> Value {
    let data_url = format!(
        "data:{};base64,{}",
        bundle.image.media_type.mime(),
        BASE64.encode(&bundle.image.bytes)
    );
    json!({
        "model": config.model_id,
        "temperature": config.temperature,
        "max_tokens": config.max_output_tokens,
        "messages": [
            { "role": "system", "content": bundle.system_text },
            {
                "role": "user",
                "content": [
                    { "type": "text", "text": bundle.user_text },
                    { "type": "image_url", "image_url": { "url": data_url } }
                ]
            }
        ]
    })
}

/// Gateway speaking the hosted chat-completions protocol.
pub struct HttpGateway {
    config: GatewayConfig,
    credential: String,
    client: reqwest::Client,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for HttpGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpGateway")
            .field("config", &self.config)
            .field("credential", &"<redacted>")
            .finish()
    }
}

enum Failure {
    Retryable(Transient),
    Fatal(GatewayError),
}

enum Transient {
    Timeout,
    RateLimited,
    Server(u16),
    Network(String),
}

impl Transient {
    fn into_error(self, attempts: u32) -> GatewayError {
        match self {
            Transient::Timeout => GatewayError::Timeout { attempts },
            Transient::RateLimited => GatewayError::RateLimited { attempts },
            Transient::Server(status) => GatewayError::Server { status, attempts },
            Transient::Network(message) => GatewayError::Network { message, attempts },
        }
    }
}

impl HttpGateway {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: GatewayConfig) -> Result<Self, GatewayError> {
        let credential = std::env::var(&config.credential_env)
            .map_err(|_| GatewayError::MissingCredential(config.credential_env.clone()))?;
        Self::with_credential(config, credential)
    }

    pub fn with_credential(
        config: GatewayConfig,
        credential: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        let permits = Arc::new(Semaphore::new(config.max_in_flight));
        Ok(Self {
            config,
            credential: credential.into(),
            client,
            permits,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    async fn attempt(&self, body: &Value) -> Result<CompletionResult, Failure> {
        let response = self
            .client
            .post(&self.config.endpoint_url)
            .bearer_auth(&self.credential)
            .json(body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    Failure::Retryable(Transient::Timeout)
                } else {
                    Failure::Retryable(Transient::Network(e.to_string()))
                }
            })?;

        let status = response.status();
        let text = response.text().await.map_err(|e| {
            if e.is_timeout() {
                Failure::Retryable(Transient::Timeout)
            } else {
                Failure::Retryable(Transient::Network(e.to_string()))
            }
        })?;

        if !status.is_success() {
            return Err(classify_status(status, &text));
        }
        parse_completion(&text, &self.config.model_id).map_err(Failure::Fatal)
    }
}

fn classify_status(status: StatusCode, body: &str) -> Failure {
    let code = status.as_u16();
    let parsed: Option<Value> = serde_json::from_str(body).ok();
    let error_code = parsed
        .as_ref()
        .and_then(|v| v["error"]["code"].as_str().map(str::to_string));
    let message = parsed
        .as_ref()
        .and_then(|v| v["error"]["message"].as_str().map(str::to_string))
        .unwrap_or_else(|| body.chars().take(200).collect());

    match code {
        401 | 403 => Failure::Fatal(GatewayError::Auth { status: code }),
        408 => Failure::Retryable(Transient::Timeout),
        429 => Failure::Retryable(Transient::RateLimited),
        500..=599 => Failure::Retryable(Transient::Server(code)),
        _ if matches!(
            error_code.as_deref(),
            Some("content_policy_violation" | "content_filter")
        ) =>
        {
            Failure::Fatal(GatewayError::ContentPolicyRefusal { message })
        }
        _ => Failure::Fatal(GatewayError::Http {
            status: code,
            message,
        }),
    }
}

fn parse_completion(body: &str, requested_model: &str) -> Result<CompletionResult, GatewayError> {
    let malformed = |m: &str| GatewayError::MalformedResponse(m.to_string());
    let value: Value = serde_json::from_str(body).map_err(|e| malformed(&e.to_string()))?;
    let choice = value["choices"]
        .get(0)
        .ok_or_else(|| malformed("response has no choices"))?;
    let message = &choice["message"];

    if let Some(refusal) = message["refusal"].as_str() {
        return Err(GatewayError::ContentPolicyRefusal {
            message: refusal.to_string(),
        });
    }
    let finish_reason = match choice["finish_reason"].as_str() {
        Some("length") => FinishReason::Length,
        Some("content_filter") => {
            return Err(GatewayError::ContentPolicyRefusal {
                message: "completion was filtered".into(),
            })
        }
        _ => FinishReason::Normal,
    };

    let raw_text = match &message["content"] {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => return Err(malformed("message has no text content")),
    };

    let usage = value.get("usage").and_then(|u| {
        Some(TokenUsage {
            prompt_tokens: u["prompt_tokens"].as_u64()?,
            completion_tokens: u["completion_tokens"].as_u64()?,
            total_tokens: u["total_tokens"].as_u64()?,
        })
    });
    let model_id = value["model"]
        .as_str()
        .unwrap_or(requested_model)
        .to_string();

    Ok(CompletionResult {
        raw_text: Some(raw_text),
        model_id,
        usage,
        finish_reason,
        attempts: 1,
    })
}

#[async_trait]
impl CompletionGateway for HttpGateway {
    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    async fn predict_raw(&self, bundle: &PromptBundle) -> Result<CompletionResult, GatewayError> {
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        let body = build_request_body(bundle, &self.config);
        let max_attempts = self.config.retry.max_attempts;

        let mut attempt = 1;
        loop {
            match self.attempt(&body).await {
                Ok(mut result) => {
                    result.attempts = attempt;
                    return Ok(result);
                }
                Err(Failure::Fatal(err)) => return Err(err),
                Err(Failure::Retryable(kind)) if attempt >= max_attempts => {
                    return Err(kind.into_error(attempt));
                }
                Err(Failure::Retryable(_)) => {
                    let delay = self.config.retry.backoff(attempt);
                    warn!(attempt, ?delay, "transient gateway failure, retrying");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                    debug!(attempt, "retrying request");
                }
            }
        }
    }
}
