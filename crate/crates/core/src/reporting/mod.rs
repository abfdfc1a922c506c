//! Data-file loaders, the bundled reference data set, and report rendering.

mod dataset;
mod loaders;
mod render;

pub use dataset::{
    DatasetBundle, ASSESSMENTS_FILE, BUNDLED_ASSESSMENTS_CSV, BUNDLED_MATCHES_CSV,
    BUNDLED_ROSTERS_CSV, MATCHES_FILE, ROSTERS_FILE,
};
pub use loaders::{
    load_assessments, load_match_table, load_rosters, parse_assessments, parse_match_table,
    parse_rosters, render_assessments_csv, render_match_table_csv, render_rosters_csv, LoadError,
    ASSESSMENTS_HEADER, MATCHES_HEADER, ROSTERS_HEADER,
};
pub use render::{
    overlap_deltas, overlap_markdown, parse_issue_report_json, parse_metrics_report_json,
    published_overlap, region_label, render_issue_report, render_metrics_report,
    render_overlap_report, OverlapDelta, OverlapReport, ReportFormat,
};
