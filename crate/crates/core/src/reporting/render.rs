use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluation::RECALL_NEEDS_MATCHING;
use crate::model::{
    IssueReport, Kappa, MethodSet, MethodTag, MetricValue, MetricsReport, OverlapSummary,
    RegionCount,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown format '{s}' (expected json or markdown)")),
        }
    }
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn parse_issue_report_json(text: &str) -> Result<IssueReport, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn parse_metrics_report_json(text: &str) -> Result<MetricsReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// JSON, or a markdown list in which each item reads `N. Title: description`.
pub fn render_issue_report(report: &IssueReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => pretty_json(report),
        ReportFormat::Markdown => issue_markdown(report),
    }
}

fn issue_markdown(report: &IssueReport) -> String {
    let mut out = String::new();
    writeln!(out, "# Usability issues: {}\n", report.view_id).unwrap();
    writeln!(
        out,
        "Model `{}`, generated {}.\n",
        report.model_id,
        report.created_at.to_rfc3339()
    )
    .unwrap();
    if report.issues.is_empty() {
        out.push_str("No usability issues were reported.\n");
    }
    for issue in &report.issues {
        let prefix = format!("{}. ", issue.ordinal);
        let indent = " ".repeat(prefix.len());
        let mut lines = issue.display_text().lines().map(str::to_string).collect::<Vec<_>>();
        if lines.is_empty() {
            lines.push(String::new());
        }
        writeln!(out, "{prefix}{}", lines[0]).unwrap();
        for line in &lines[1..] {
            if line.trim().is_empty() {
                out.push('\n');
            } else {
                writeln!(out, "{indent}{line}").unwrap();
            }
        }
        out.push('\n');
    }
    if !report.diagnostics.is_empty() {
        out.push_str("## Diagnostics\n\n");
        for d in &report.diagnostics {
            writeln!(out, "- {d}").unwrap();
        }
    }
    out
}

fn metric_cell(value: &MetricValue, assessed: u64) -> String {
    match value {
        MetricValue::Defined { value } => format!("{value} ({})", value.to_decimal(2)),
        MetricValue::Undefined { reason } if reason == RECALL_NEEDS_MATCHING => "unavailable".into(),
        MetricValue::Undefined { .. } => format!("undefined ({assessed} assessed)"),
    }
}

fn kappa_cell(k: &Kappa) -> (String, String) {
    match (k.value, k.band()) {
        (Some(v), Some(band)) => (format!("{v:.2}"), band.to_string()),
        _ => ("undefined".into(), "n/a".into()),
    }
}

/// JSON, or markdown tables for counts, precision and recall, agreement and overlap.
pub fn render_metrics_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => pretty_json(report),
        ReportFormat::Markdown => metrics_markdown(report),
    }
}

fn metrics_markdown(report: &MetricsReport) -> String {
    let mut out = String::from("# Evaluation\n\n");
    writeln!(
        out,
        "Validity rule `{}`: {} tool issues count as real.\n",
        report.validity_rule,
        report.valid_tool_issues.len()
    )
    .unwrap();

    out.push_str("## Raters\n\n");
    out.push_str("| Rater | A | B | C | D | Precision | Recall |\n");
    out.push_str("|---|---:|---:|---:|---:|---|---|\n");
    for r in &report.raters {
        let c = &r.counts;
        let assessed = c.true_positives() + c.false_positives();
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            c.rater_id,
            c.count_a,
            c.count_b,
            c.count_c,
            c.count_d,
            metric_cell(&r.precision, assessed),
            metric_cell(&r.recall, c.true_positives()),
        )
        .unwrap();
    }
    out.push('\n');
    match report.false_negatives {
        Some(fns) => writeln!(
            out,
            "False negatives: {} (testing and expert-review records; {} distinct issues).\n",
            fns.records, fns.distinct_issues
        )
        .unwrap(),
        None => out.push_str("False negatives: unavailable without rosters and match groups.\n\n"),
    }

    out.push_str("## Agreement\n\n");
    if !report.kappa.is_empty() {
        out.push_str("| Raters | Mode | Items | Kappa | Band |\n");
        out.push_str("|---|---|---:|---:|---|\n");
        for k in &report.kappa {
            let (value, band) = kappa_cell(k);
            writeln!(
                out,
                "| {} / {} | {} | {} | {value} | {band} |",
                k.rater_x, k.rater_y, k.mode, k.items
            )
            .unwrap();
        }
        out.push('\n');
    }
    if let Some(reason) = &report.kappa_unavailable {
        writeln!(out, "Kappa unavailable: {reason}.\n").unwrap();
    }

    if let Some(overlap) = &report.overlap {
        out.push_str("## Overlap\n\n");
        out.push_str(&overlap_markdown(overlap, None));
    }
    out
}

/// Human-readable name of a Venn region.
pub fn region_label(set: MethodSet) -> String {
    match set.len() {
        1 => format!("{set} only"),
        3 => "all three".to_string(),
        _ => format!("{} only", set.methods().iter().map(|m| m.short_name()).collect::<Vec<_>>().join(" and ")),
    }
}

/// Region and total counts as printed in the reference study's overlap figure. Its
/// totals do not reconcile with its regions, so `check_sums` fails on it by design.
pub fn published_overlap() -> OverlapSummary {
    use MethodTag::*;
    let region = |methods: &[MethodTag], count| RegionCount {
        methods: MethodSet::of(methods),
        count,
    };
    let regions = vec![
        region(&[UsabilityTesting], 8),
        region(&[ExpertReview], 31),
        region(&[ToolPrediction], 8),
        region(&[UsabilityTesting, ExpertReview], 6),
        region(&[UsabilityTesting, ToolPrediction], 3),
        region(&[ExpertReview, ToolPrediction], 9),
        region(&[UsabilityTesting, ExpertReview, ToolPrediction], 9),
    ];
    let union_total = regions.iter().map(|r| r.count).sum();
    OverlapSummary {
        per_method_total: [(UsabilityTesting, 25), (ExpertReview, 54), (ToolPrediction, 30)]
            .into_iter()
            .collect(),
        regions,
        union_total,
    }
}

/// One computed count next to its reference value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapDelta {
    pub label: String,
    pub computed: usize,
    pub reference: usize,
    pub delta: i64,
}

/// Regions first, then per-method totals.
pub fn overlap_deltas(computed: &OverlapSummary, reference: &OverlapSummary) -> Vec<OverlapDelta> {
    let row = |label: String, c: usize, r: usize| OverlapDelta {
        label,
        computed: c,
        reference: r,
        delta: c as i64 - r as i64,
    };
    let mut rows: Vec<OverlapDelta> = MethodSet::REGIONS
        .into_iter()
        .map(|set| row(region_label(set), computed.region(set), reference.region(set)))
        .collect();
    for m in MethodTag::ALL {
        rows.push(row(format!("{m} total"), computed.total(m), reference.total(m)));
    }
    rows
}

/// Overlap table; with a reference, adds reference and delta columns.
pub fn overlap_markdown(summary: &OverlapSummary, reference: Option<&OverlapSummary>) -> String {
    let mut out = String::new();
    match reference {
        None => {
            out.push_str("| Region | Issues |\n|---|---:|\n");
            for set in MethodSet::REGIONS {
                writeln!(out, "| {} | {} |", region_label(set), summary.region(set)).unwrap();
            }
            for m in MethodTag::ALL {
                writeln!(out, "| {m} total | {} |", summary.total(m)).unwrap();
            }
        }
        Some(reference) => {
            out.push_str("| Region | Issues | Published | Delta |\n|---|---:|---:|---:|\n");
            for d in overlap_deltas(summary, reference) {
                writeln!(
                    out,
                    "| {} | {} | {} | {:+} |",
                    d.label, d.computed, d.reference, d.delta
                )
                .unwrap();
            }
        }
    }
    writeln!(out, "\nDistinct issues across all methods: {}.", summary.union_total).unwrap();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub summary: OverlapSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<OverlapDelta>>,
}

pub fn render_overlap_report(
    summary: &OverlapSummary,
    reference: Option<&OverlapSummary>,
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Json => pretty_json(&OverlapReport {
            summary: summary.clone(),
            deltas: reference.map(|r| overlap_deltas(summary, r)),
        }),
        ReportFormat::Markdown => {
            format!("# Overlap between methods\n\n{}", overlap_markdown(summary, reference))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        ConfusionCounts, KappaMode, PredictedIssue, Proportion, RaterMetrics, ValidityRule,
        METRICS_REPORT_SCHEMA_VERSION,
    };
    use chrono::DateTime;

    fn issue(ordinal: u32, title: Option<&str>, description: &str) -> PredictedIssue {
        let text = match title {
            Some(t) => format!("{t}: {description}"),
            None => description.to_string(),
        };
        PredictedIssue {
            ordinal,
            title: title.map(str::to_string),
            description: description.into(),
            raw_text: format!("{ordinal}. {text}"),
        }
    }

    fn report(issues: Vec<PredictedIssue>) -> IssueReport {
        IssueReport::new("category-view", "gpt-4-turbo", DateTime::UNIX_EPOCH, issues)
    }

    #[test]
    fn markdown_lists_numbered_items() {
        let r = report(vec![
            issue(1, Some("Ambiguous delete"), "The icon is unclear."),
            issue(2, None, "Labels are small.\nAnd grey."),
        ]);
        let md = render_issue_report(&r, ReportFormat::Markdown);
        assert!(md.contains("\n1. Ambiguous delete: The icon is unclear.\n\n2. Labels are small.\n   And grey.\n"));
        let numbered = md.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count();
        assert_eq!(numbered, 2);
    }

    #[test]
    fn empty_report_json() {
        let json = render_issue_report(&report(vec![]), ReportFormat::Json);
        assert!(json.contains("\"issues\": []"));
        assert!(json.contains("\"schema_version\": 1"));
        assert_eq!(parse_issue_report_json(&json).unwrap(), report(vec![]));
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let mut r = report(vec![issue(1, Some("A"), "b")]);
        r.diagnostics.push("skipped".into());
        let a = render_issue_report(&r, ReportFormat::Json);
        assert_eq!(a, render_issue_report(&r, ReportFormat::Json));
        assert_eq!(parse_issue_report_json(&a).unwrap(), r);
    }

    fn metrics(precision: MetricValue) -> MetricsReport {
        MetricsReport {
            schema_version: METRICS_REPORT_SCHEMA_VERSION,
            raters: vec![RaterMetrics {
                counts: ConfusionCounts::new("E1", 27, 13, 5, 4),
                precision,
                recall: MetricValue::Defined {
                    value: Proportion::new(27, 78).unwrap(),
                },
            }],
            validity_rule: ValidityRule::AtLeastOneA,
            valid_tool_issues: vec!["C1".into()],
            false_negatives: None,
            kappa: vec![Kappa {
                rater_x: "E1".into(),
                rater_y: "E2".into(),
                mode: KappaMode::ExcludeUncertain,
                items: 42,
                observed_agreement: 0.8,
                chance_agreement: 0.5,
                value: Some(0.5333),
            }],
            kappa_unavailable: None,
            overlap: None,
        }
    }

    #[test]
    fn metrics_markdown_shows_fractions_and_band() {
        let md = render_metrics_report(
            &metrics(MetricValue::Defined {
                value: Proportion::new(27, 44).unwrap(),
            }),
            ReportFormat::Markdown,
        );
        assert!(md.contains("27/44 (0.61)"));
        assert!(md.contains("27/78 (0.35)"));
        assert!(md.contains("| 0.53 | Moderate |"));
    }

    #[test]
    fn undefined_precision_is_not_zero() {
        let mut m = metrics(MetricValue::Undefined {
            reason: "no issues labelled A, B or D".into(),
        });
        m.raters[0].counts = ConfusionCounts::new("E1", 0, 0, 3, 0);
        let md = render_metrics_report(&m, ReportFormat::Markdown);
        assert!(md.contains("undefined (0 assessed)"));
        assert!(!md.contains("0.00"));
    }

    #[test]
    fn metrics_json_round_trip() {
        let m = metrics(MetricValue::Defined {
            value: Proportion::new(27, 44).unwrap(),
        });
        let json = render_metrics_report(&m, ReportFormat::Json);
        assert_eq!(parse_metrics_report_json(&json).unwrap(), m);
    }

    #[test]
    fn published_figure_totals_do_not_reconcile() {
        let p = published_overlap();
        assert_eq!(p.triple(), 9);
        assert!(p.check_sums().is_err());
        let deltas = overlap_deltas(&p, &p);
        assert_eq!(deltas.len(), 10);
        assert!(deltas.iter().all(|d| d.delta == 0));
        assert_eq!(deltas[6].label, "all three");
        assert_eq!(deltas[3].label, "testing and expert only");
    }
}
