use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::view::Violation;

/// Version of the issue-report JSON layout.
pub const ISSUE_REPORT_SCHEMA_VERSION: u32 = 1;

/// One usability issue extracted from a model answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedIssue {
    /// 1-based position in the answer.
    pub ordinal: u32,
    /// Short heading when the item follows the `Title: explanation` convention.
    #[serde(default)]
    pub title: Option<String>,
    pub description: String,
    /// The item exactly as the model wrote it, marker included.
    pub raw_text: String,
}

impl PredictedIssue {
    /// `Title: description`, or just the description when untitled.
    pub fn display_text(&self) -> String {
        match &self.title {
            Some(t) => format!("{t}: {}", self.description),
            None => self.description.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

/// Structured result of one prediction run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueReport {
    pub schema_version: u32,
    pub view_id: String,
    pub model_id: String,
    pub created_at: DateTime<Utc>,
    pub issues: Vec<PredictedIssue>,
    #[serde(default)]
    pub usage: Option<TokenUsage>,
    /// Non-fatal notes from parsing, e.g. skipped leading prose.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl IssueReport {
    pub fn new(
        view_id: impl Into<String>,
        model_id: impl Into<String>,
        created_at: DateTime<Utc>,
        issues: Vec<PredictedIssue>,
    ) -> Self {
        Self {
            schema_version: ISSUE_REPORT_SCHEMA_VERSION,
            view_id: view_id.into(),
            model_id: model_id.into(),
            created_at,
            issues,
            usage: None,
            diagnostics: Vec::new(),
        }
    }

    /// Issue id used when predictions of this report are assessed: `<view_id>-<ordinal>`.
    pub fn issue_id(&self, ordinal: u32) -> String {
        format!("{}-{}", self.view_id, ordinal)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.view_id.trim().is_empty() {
            out.push(Violation::new("view_id", "must not be empty"));
        }
        for (idx, issue) in self.issues.iter().enumerate() {
            let expected = idx as u32 + 1;
            if issue.ordinal != expected {
                out.push(Violation::new(
                    format!("issues[{idx}].ordinal"),
                    format!("expected {expected}, found {}", issue.ordinal),
                ));
            }
            if issue.description.trim().is_empty() {
                out.push(Violation::new(
                    format!("issues[{idx}].description"),
                    "must not be empty",
                ));
            } else if !issue.raw_text.contains(&issue.description) {
                out.push(Violation::new(
                    format!("issues[{idx}].raw_text"),
                    "does not contain the description",
                ));
            }
        }
        out
    }
}
