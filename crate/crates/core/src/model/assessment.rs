use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four categories a human assigns to a predicted issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssessmentLabel {
    /// Usability issue.
    A,
    /// No usability issue.
    B,
    /// Uncertain.
    C,
    /// Irrelevant or incorrect statement.
    D,
}

impl AssessmentLabel {
    pub const ALL: [AssessmentLabel; 4] = [
        AssessmentLabel::A,
        AssessmentLabel::B,
        AssessmentLabel::C,
        AssessmentLabel::D,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AssessmentLabel::A => "A",
            AssessmentLabel::B => "B",
            AssessmentLabel::C => "C",
            AssessmentLabel::D => "D",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim() {
            "A" | "a" => Some(AssessmentLabel::A),
            "B" | "b" => Some(AssessmentLabel::B),
            "C" | "c" => Some(AssessmentLabel::C),
            "D" | "d" => Some(AssessmentLabel::D),
            _ => None,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            AssessmentLabel::A => "Usability Issue",
            AssessmentLabel::B => "No Usability Issue",
            AssessmentLabel::C => "Uncertain",
            AssessmentLabel::D => "Irrelevant/Incorrect Statement",
        }
    }
}

impl fmt::Display for AssessmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid assessment label '{0}' (expected A, B, C or D)")]
pub struct InvalidLabel(pub String);

impl FromStr for AssessmentLabel {
    type Err = InvalidLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code(s).ok_or_else(|| InvalidLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate assessment of issue '{issue_id}' by rater '{rater_id}'")]
pub struct DuplicateAssessment {
    pub issue_id: String,
    pub rater_id: String,
}

/// One row of an assessment table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentEntry {
    pub issue_id: String,
    pub rater_id: String,
    pub label: AssessmentLabel,
}

/// Per-issue, per-rater labels. At most one label per (issue, rater).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssessmentTable {
    by_rater: BTreeMap<String, BTreeMap<String, AssessmentLabel>>,
}

impl AssessmentTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Makes a rater known even before it has labelled anything.
    pub fn register_rater(&mut self, rater_id: impl Into<String>) {
        self.by_rater.entry(rater_id.into()).or_default();
    }

    pub fn insert(
        &mut self,
        issue_id: impl Into<String>,
        rater_id: impl Into<String>,
        label: AssessmentLabel,
    ) -> Result<(), DuplicateAssessment> {
        let issue_id = issue_id.into();
        let rater_id = rater_id.into();
        let labels = self.by_rater.entry(rater_id.clone()).or_default();
        if labels.contains_key(&issue_id) {
            return Err(DuplicateAssessment { issue_id, rater_id });
        }
        labels.insert(issue_id, label);
        Ok(())
    }

    /// Inserts or replaces, returning the previous label.
    pub fn set(
        &mut self,
        issue_id: impl Into<String>,
        rater_id: impl Into<String>,
        label: AssessmentLabel,
    ) -> Option<AssessmentLabel> {
        self.by_rater
            .entry(rater_id.into())
            .or_default()
            .insert(issue_id.into(), label)
    }

    pub fn get(&self, issue_id: &str, rater_id: &str) -> Option<AssessmentLabel> {
        self.by_rater.get(rater_id)?.get(issue_id).copied()
    }

    pub fn has_rater(&self, rater_id: &str) -> bool {
        self.by_rater.contains_key(rater_id)
    }

    pub fn raters(&self) -> impl Iterator<Item = &str> {
        self.by_rater.keys().map(String::as_str)
    }

    pub fn labels_of(&self, rater_id: &str) -> Option<&BTreeMap<String, AssessmentLabel>> {
        self.by_rater.get(rater_id)
    }

    /// Union of issue ids over all raters.
    pub fn issue_ids(&self) -> BTreeSet<&str> {
        self.by_rater
            .values()
            .flat_map(|m| m.keys().map(String::as_str))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.by_rater.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows in (rater, issue) order.
    pub fn entries(&self) -> Vec<AssessmentEntry> {
        self.by_rater
            .iter()
            .flat_map(|(rater, labels)| {
                labels.iter().map(move |(issue, label)| AssessmentEntry {
                    issue_id: issue.clone(),
                    rater_id: rater.clone(),
                    label: *label,
                })
            })
            .collect()
    }
}
