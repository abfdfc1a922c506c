//! One prediction run: validate, compress, assemble, ask the model, parse.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::gateway::{CompletionGateway, FinishReason, GatewayError};
use crate::image_prep::{ImageCompressor, ImagePrepError, LocalCompressor};
use crate::model::{validate_view, InputLimits, IssueReport, ViewUnderTest, Violation};
use crate::parser::{parse_response, ParseError};
use crate::prompt::{PromptBundle, PromptError, PromptTemplates};

/// Coarse failure class; the CLI maps each to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Gateway,
    Parse,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Gateway => 3,
            ErrorClass::Parse => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Input => "input",
            ErrorClass::Gateway => "gateway",
            ErrorClass::Parse => "parse",
        }
    }
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("invalid input: {}", join(.0))]
    InvalidInput(Vec<Violation>),
    #[error(transparent)]
    Image(#[from] ImagePrepError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("could not parse the model answer: {0}")]
    Parse(#[from] ParseError),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl PredictError {
    pub fn class(&self) -> ErrorClass {
        match self {
            PredictError::InvalidInput(_) | PredictError::Image(_) | PredictError::Prompt(_) => {
                ErrorClass::Input
            }
            PredictError::Gateway(_) => ErrorClass::Gateway,
            PredictError::Parse(_) => ErrorClass::Parse,
        }
    }
}

/// The prediction pipeline over swappable gateway and compressor implementations.
#[derive(Clone)]
pub struct Predictor {
    gateway: Arc<dyn CompletionGateway>,
    compressor: Arc<dyn ImageCompressor>,
    templates: PromptTemplates,
    limits: InputLimits,
}

impl Predictor {
    /// Local compression with the default policy, shipped templates, default limits.
    pub fn new(gateway: Arc<dyn CompletionGateway>) -> Self {
        Self {
            gateway,
            compressor: Arc::new(LocalCompressor::default()),
            templates: PromptTemplates::default(),
            limits: InputLimits::default(),
        }
    }

    pub fn with_compressor(mut self, compressor: Arc<dyn ImageCompressor>) -> Self {
        self.compressor = compressor;
        self
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_limits(mut self, limits: InputLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn model_id(&self) -> &str {
        self.gateway.model_id()
    }

    /// Validates the view, compresses its screenshot and assembles the prompt bundle.
    pub async fn prepare(&self, view: &ViewUnderTest) -> Result<PromptBundle, PredictError> {
        let violations = validate_view(view, &self.limits);
        if !violations.is_empty() {
            return Err(PredictError::InvalidInput(violations));
        }
        let screenshot = self.compressor.compress(&view.screenshot).await?;
        let view = ViewUnderTest {
            screenshot,
            ..view.clone()
        };
        Ok(self.templates.assemble(&view, self.limits.source_chars)?)
    }

    pub async fn predict(
        &self,
        view: &ViewUnderTest,
        created_at: DateTime<Utc>,
    ) -> Result<IssueReport, PredictError> {
        let bundle = self.prepare(view).await?;
        let result = self.gateway.predict_raw(&bundle).await?;
        let raw = result.raw_text.ok_or_else(|| GatewayError::ContentPolicyRefusal {
            message: "the provider returned no text".into(),
        })?;
        let parsed = parse_response(&raw)?;

        let mut report = IssueReport::new(&view.view_id, result.model_id, created_at, parsed.issues);
        report.usage = result.usage;
        report.diagnostics = parsed.diagnostics;
        if result.finish_reason == FinishReason::Length {
            report
                .diagnostics
                .push("the answer hit the output token limit and may be cut off".into());
        }
        Ok(report)
    }
}
