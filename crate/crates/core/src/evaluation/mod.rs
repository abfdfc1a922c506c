//! Confusion counts, precision and recall, Cohen's kappa and cross-method overlap.
//!
//! Precision treats `A` as a true positive and `B` or `D` as a false positive; `C`
//! (uncertain) is left out entirely. Recall divides the true positives by true
//! positives plus the testing and expert-review records the tool missed.

mod kappa;
mod universe;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    AssessmentLabel, AssessmentTable, ConfusionCounts, FalseNegatives, KappaMode, MatchGroup,
    MatchGroupError, MethodTag, MetricValue, MetricsReport, Proportion, RaterMetrics, Rosters,
    ValidityRule, METRICS_REPORT_SCHEMA_VERSION,
};

pub use kappa::cohens_kappa;
pub use universe::{
    build_universe, distinct_false_negative_count, false_negative_count, overlap_summary,
};

/// Reason recorded for recall when no rosters or match groups were supplied.
pub const RECALL_NEEDS_MATCHING: &str = "false negatives need rosters and match groups";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvaluationError {
    #[error("rater '{0}' has no assessments in the table")]
    UnknownRater(String),
    #[error("{metric} is undefined: its denominator is zero")]
    UndefinedMetric { metric: &'static str },
    #[error(
        "raters '{rater_x}' and '{rater_y}' labelled different issues \
         (only {rater_x}: {only_x:?}; only {rater_y}: {only_y:?})"
    )]
    MismatchedItemSets {
        rater_x: String,
        rater_y: String,
        only_x: Vec<String>,
        only_y: Vec<String>,
    },
    #[error("no items left to compare between '{rater_x}' and '{rater_y}' in {mode} mode")]
    EmptyItemSet {
        rater_x: String,
        rater_y: String,
        mode: KappaMode,
    },
    #[error("issue id '{id}' appears in match groups {first_group} and {second_group}")]
    DuplicateIdAcrossGroups {
        id: String,
        first_group: usize,
        second_group: usize,
    },
    #[error("match group {group} lists '{id}', which is not in any roster")]
    UnknownIdInGroup { id: String, group: usize },
    #[error("match group {group} lists '{id}' under {listed}, but the rosters say {actual}")]
    MethodMismatch {
        id: String,
        group: usize,
        listed: MethodTag,
        actual: MethodTag,
    },
    #[error("match group {group} is invalid: {source}")]
    InvalidGroup {
        group: usize,
        source: MatchGroupError,
    },
}

pub fn confusion_counts(
    table: &AssessmentTable,
    rater_id: &str,
) -> Result<ConfusionCounts, EvaluationError> {
    let labels = table
        .labels_of(rater_id)
        .ok_or_else(|| EvaluationError::UnknownRater(rater_id.to_string()))?;
    let mut counts = ConfusionCounts::zero(rater_id);
    for &label in labels.values() {
        counts.add(label);
    }
    Ok(counts)
}

/// `A / (A + B + D)`.
pub fn precision(counts: &ConfusionCounts) -> Result<Proportion, EvaluationError> {
    let tp = counts.true_positives();
    Proportion::new(tp, tp + counts.false_positives())
        .ok_or(EvaluationError::UndefinedMetric { metric: "precision" })
}

/// `A / (A + false_negatives)`.
pub fn recall(counts: &ConfusionCounts, false_negatives: u64) -> Result<Proportion, EvaluationError> {
    let tp = counts.true_positives();
    Proportion::new(tp, tp + false_negatives)
        .ok_or(EvaluationError::UndefinedMetric { metric: "recall" })
}

/// Issue ids the raters accept as real usability issues under `rule`.
pub fn valid_tool_issue_ids(table: &AssessmentTable, rule: ValidityRule) -> BTreeSet<String> {
    let raters: Vec<&str> = table.raters().collect();
    table
        .issue_ids()
        .into_iter()
        .filter(|id| {
            let is_a = |r: &&str| table.get(id, r) == Some(AssessmentLabel::A);
            match rule {
                ValidityRule::AtLeastOneA => raters.iter().any(is_a),
                ValidityRule::AllRatersA => raters.iter().all(is_a),
            }
        })
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsOptions {
    pub rule: ValidityRule,
    pub kappa_modes: Vec<KappaMode>,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            rule: ValidityRule::AtLeastOneA,
            kappa_modes: KappaMode::ALL.to_vec(),
        }
    }
}

/// Everything at once. Without rosters and match groups, recall, false negatives and
/// overlap are left out. Kappa problems (one rater, differing item sets) are reported in
/// `kappa_unavailable` rather than failing the whole report.
pub fn compute_metrics(
    table: &AssessmentTable,
    matching: Option<(&Rosters, &[MatchGroup])>,
    options: &MetricsOptions,
) -> Result<MetricsReport, EvaluationError> {
    let valid = valid_tool_issue_ids(table, options.rule);

    let (false_negatives, overlap) = match matching {
        Some((rosters, groups)) => {
            let universe = build_universe(rosters, groups, &valid)?;
            let fns = FalseNegatives {
                records: false_negative_count(&universe),
                distinct_issues: distinct_false_negative_count(&universe),
            };
            (Some(fns), Some(overlap_summary(&universe)))
        }
        None => (None, None),
    };

    let mut raters = Vec::new();
    for rater in table.raters() {
        let counts = confusion_counts(table, rater)?;
        let precision = match precision(&counts) {
            Ok(p) => MetricValue::Defined { value: p },
            Err(_) => MetricValue::Undefined {
                reason: "no issues labelled A, B or D".into(),
            },
        };
        let recall = match false_negatives {
            Some(fns) => match recall(&counts, fns.records) {
                Ok(r) => MetricValue::Defined { value: r },
                Err(_) => MetricValue::Undefined {
                    reason: "no true positives and no false negatives".into(),
                },
            },
            None => MetricValue::Undefined {
                reason: RECALL_NEEDS_MATCHING.into(),
            },
        };
        raters.push(RaterMetrics {
            counts,
            precision,
            recall,
        });
    }

    let rater_ids: Vec<&str> = table.raters().collect();
    let mut kappa = Vec::new();
    let mut problems = Vec::new();
    if rater_ids.len() < 2 {
        problems.push(format!("kappa needs two raters, found {}", rater_ids.len()));
    } else {
        for (i, x) in rater_ids.iter().enumerate() {
            for y in &rater_ids[i + 1..] {
                for &mode in &options.kappa_modes {
                    match cohens_kappa(table, x, y, mode) {
                        Ok(k) => kappa.push(k),
                        Err(e) => problems.push(e.to_string()),
                    }
                }
            }
        }
    }

    Ok(MetricsReport {
        schema_version: METRICS_REPORT_SCHEMA_VERSION,
        raters,
        validity_rule: options.rule,
        valid_tool_issues: valid.into_iter().collect(),
        false_negatives,
        kappa,
        kappa_unavailable: (!problems.is_empty()).then(|| problems.join("; ")),
        overlap,
    })
}
