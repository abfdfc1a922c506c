use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{bundle_digest, CompletionGateway, CompletionResult, FinishReason, GatewayError};
use crate::model::TokenUsage;
use crate::prompt::PromptBundle;

/// A canned answer: plain text, or text with the model id and usage a live call reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureEntry {
    Text(String),
    Recorded {
        text: String,
        #[serde(default)]
        model_id: Option<String>,
        #[serde(default)]
        usage: Option<TokenUsage>,
    },
}

impl FixtureEntry {
    pub fn text(&self) -> &str {
        match self {
            FixtureEntry::Text(text) | FixtureEntry::Recorded { text, .. } => text,
        }
    }
}

impl From<String> for FixtureEntry {
    fn from(text: String) -> Self {
        FixtureEntry::Text(text)
    }
}

/// Recorded responses keyed by bundle digest.
///
/// ```json
/// { "model_id": "gpt-4-turbo", "responses": { "<sha256 hex>": "1. Title: text\n\n" } }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub model_id: String,
    pub responses: BTreeMap<String, FixtureEntry>,
}

impl FixtureFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GatewayError> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| GatewayError::Fixture(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))
    }
}

/// Answers from recorded fixtures; unknown bundles fail with `MissingFixture`.
#[derive(Debug, Clone)]
pub struct MockGateway {
    fixtures: FixtureFile,
}

impl MockGateway {
    pub fn new(fixtures: FixtureFile) -> Self {
        Self { fixtures }
    }

    pub fn from_responses(
        model_id: impl Into<String>,
        responses: BTreeMap<String, String>,
    ) -> Self {
        Self::new(FixtureFile {
            model_id: model_id.into(),
            responses: responses.into_iter().map(|(k, v)| (k, v.into())).collect(),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        FixtureFile::load(path).map(Self::new)
    }
}

#[async_trait]
impl CompletionGateway for MockGateway {
    fn model_id(&self) -> &str {
        &self.fixtures.model_id
    }

    async fn predict_raw(&self, bundle: &PromptBundle) -> Result<CompletionResult, GatewayError> {
        let digest = bundle_digest(bundle);
        let entry = self
            .fixtures
            .responses
            .get(&digest)
            .ok_or(GatewayError::MissingFixture(digest))?;
        let (model_id, usage) = match entry {
            FixtureEntry::Text(_) => (None, None),
            FixtureEntry::Recorded { model_id, usage, .. } => (model_id.clone(), *usage),
        };
        Ok(CompletionResult {
            raw_text: Some(entry.text().to_string()),
            model_id: model_id.unwrap_or_else(|| self.fixtures.model_id.clone()),
            usage,
            finish_reason: FinishReason::Normal,
            attempts: 1,
        })
    }
}

/// Wraps a gateway and remembers every successful answer so it can be replayed by
/// [`MockGateway`].
pub struct RecordingGateway<G> {
    inner: G,
    recorded: Mutex<BTreeMap<String, FixtureEntry>>,
}

impl<G: CompletionGateway> RecordingGateway<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn fixtures(&self) -> FixtureFile {
        FixtureFile {
            model_id: self.inner.model_id().to_string(),
            responses: self.recorded.lock().expect("recorder lock").clone(),
        }
    }
}

#[async_trait]
impl<G: CompletionGateway> CompletionGateway for RecordingGateway<G> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    async fn predict_raw(&self, bundle: &PromptBundle) -> Result<CompletionResult, GatewayError> {
        let result = self.inner.predict_raw(bundle).await?;
        if let Some(text) = &result.raw_text {
            let entry = FixtureEntry::Recorded {
                text: text.clone(),
                model_id: Some(result.model_id.clone()),
                usage: result.usage,
            };
            self.recorded
                .lock()
                .expect("recorder lock")
                .insert(bundle_digest(bundle), entry);
        }
        Ok(result)
    }
}
