//! Shared domain types. Values are immutable once built and safe to share across tasks.

pub mod assessment;
pub mod issue;
pub mod matching;
pub mod metrics;
pub mod view;

pub use assessment::{
    AssessmentEntry, AssessmentLabel, AssessmentTable, DuplicateAssessment, InvalidLabel,
};
pub use issue::{IssueReport, PredictedIssue, TokenUsage, ISSUE_REPORT_SCHEMA_VERSION};
pub use matching::{
    DistinctIssue, DuplicateRosterId, IssueUniverse, MatchGroup, MatchGroupError, MethodSet,
    MethodTag, OverlapSummary, RegionCount, RosterEntry, Rosters, UnknownMethod,
};
pub use metrics::{
    AgreementBand, ConfusionCounts, FalseNegatives, Kappa, KappaMode, MetricValue, MetricsReport,
    Proportion, RaterMetrics, ValidityRule, METRICS_REPORT_SCHEMA_VERSION,
};
pub use view::{
    validate_view, AppContext, InputLimits, MediaType, ScreenshotImage, SourceFile, ViewSource,
    ViewUnderTest, Violation, DEFAULT_CONTEXT_FIELD_LIMIT, DEFAULT_SOURCE_LIMIT,
};
