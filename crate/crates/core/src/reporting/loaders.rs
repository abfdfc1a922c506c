//! CSV loaders for assessments, rosters and match tables.
//!
//! All three files are UTF-8, comma separated, with a header row; lines starting with
//! `#` are ignored. Ids inside a match-table cell are separated by `;`, and `/` or an
//! empty cell means none.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{
    AssessmentLabel, AssessmentTable, DuplicateAssessment, InvalidLabel, MatchGroup,
    MatchGroupError, MethodTag, RosterEntry, Rosters, UnknownMethod,
};

pub const ASSESSMENTS_HEADER: [&str; 3] = ["issue_id", "rater_id", "label"];
pub const ROSTERS_HEADER: [&str; 5] = ["issue_id", "method", "app", "view", "text"];
pub const MATCHES_HEADER: [&str; 4] = ["view", "testing_ids", "expert_ids", "tool_ids"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: Box<LoadError>,
    },
    #[error("cannot read file: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {source}")]
    InvalidLabel { line: u64, source: InvalidLabel },
    #[error("line {line}: {source}")]
    DuplicateAssessment {
        line: u64,
        source: DuplicateAssessment,
    },
    #[error("line {line}: {source}")]
    UnknownMethod { line: u64, source: UnknownMethod },
    #[error("line {line}: issue id '{id}' appears more than once")]
    DuplicateRosterId { line: u64, id: String },
    #[error("line {line}: {source}")]
    InvalidGroup {
        line: u64,
        source: MatchGroupError,
    },
    #[error("line {line}: unknown issue id '{id}'")]
    UnknownId { line: u64, id: String },
    #[error("line {line}: '{id}' is listed as {listed} but the rosters say {actual}")]
    MethodMismatch {
        line: u64,
        id: String,
        listed: MethodTag,
        actual: MethodTag,
    },
    #[error("line {line}: issue id '{id}' already used by the group on line {first_line}")]
    DuplicateIdAcrossGroups {
        line: u64,
        id: String,
        first_line: u64,
    },
    #[error("{0}")]
    CrossReference(String),
}

impl LoadError {
    /// Line number of the offending row, if the error is tied to one.
    pub fn line(&self) -> Option<u64> {
        match self {
            LoadError::File { source, .. } => source.line(),
            LoadError::Io(_) | LoadError::CrossReference(_) => None,
            LoadError::Parse { line, .. }
            | LoadError::InvalidLabel { line, .. }
            | LoadError::DuplicateAssessment { line, .. }
            | LoadError::UnknownMethod { line, .. }
            | LoadError::DuplicateRosterId { line, .. }
            | LoadError::InvalidGroup { line, .. }
            | LoadError::UnknownId { line, .. }
            | LoadError::MethodMismatch { line, .. }
            | LoadError::DuplicateIdAcrossGroups { line, .. } => Some(*line),
        }
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| LoadError::File {
        path: path.to_path_buf(),
        source: Box::new(LoadError::Io(e.to_string())),
    })
}

fn in_file<T>(path: &Path, result: Result<T, LoadError>) -> Result<T, LoadError> {
    result.map_err(|e| LoadError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Rows of a CSV text after checking the header, each with its 1-based line number.
fn rows(text: &str, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| LoadError::Parse {
        line: e.position().map_or(1, |p| p.line()),
        message: e.to_string(),
    })?;
    let header_line = found.position().map_or(1, |p| p.line());
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(LoadError::Parse {
            line: header_line,
            message: format!(
                "expected header '{}', found '{}'",
                header.join(","),
                found.join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| LoadError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(LoadError::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        out.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

pub fn parse_assessments(text: &str) -> Result<AssessmentTable, LoadError> {
    let mut table = AssessmentTable::new();
    for (line, fields) in rows(text, &ASSESSMENTS_HEADER)? {
        let [issue, rater, label] = <[String; 3]>::try_from(fields).expect("field count checked");
        if issue.is_empty() || rater.is_empty() {
            return Err(LoadError::Parse {
                line,
                message: "issue_id and rater_id must not be empty".into(),
            });
        }
        let label: AssessmentLabel = label
            .parse()
            .map_err(|source| LoadError::InvalidLabel { line, source })?;
        table
            .insert(issue, rater, label)
            .map_err(|source| LoadError::DuplicateAssessment { line, source })?;
    }
    Ok(table)
}

pub fn load_assessments(path: impl AsRef<Path>) -> Result<AssessmentTable, LoadError> {
    let path = path.as_ref();
    in_file(path, parse_assessments(&read(path)?))
}

pub fn parse_rosters(text: &str) -> Result<Rosters, LoadError> {
    let mut entries = Vec::new();
    let mut seen = BTreeMap::new();
    for (line, fields) in rows(text, &ROSTERS_HEADER)? {
        let [id, method, app, view, text] =
            <[String; 5]>::try_from(fields).expect("field count checked");
        if id.is_empty() {
            return Err(LoadError::Parse {
                line,
                message: "issue_id must not be empty".into(),
            });
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(LoadError::DuplicateRosterId { line, id });
        }
        let method = method
            .parse()
            .map_err(|source| LoadError::UnknownMethod { line, source })?;
        entries.push(RosterEntry {
            id,
            method,
            app,
            view,
            text,
        });
    }
    Rosters::new(entries).map_err(|e| LoadError::CrossReference(e.to_string()))
}

pub fn load_rosters(path: impl AsRef<Path>) -> Result<Rosters, LoadError> {
    let path = path.as_ref();
    in_file(path, parse_rosters(&read(path)?))
}

fn split_ids(cell: &str) -> Vec<&str> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "/" {
        return Vec::new();
    }
    cell.split(';').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Parses a match table. With `rosters`, every id must exist and sit in the column of
/// its method.
pub fn parse_match_table(
    text: &str,
    rosters: Option<&Rosters>,
) -> Result<Vec<MatchGroup>, LoadError> {
    let mut groups = Vec::new();
    let mut owner: BTreeMap<String, u64> = BTreeMap::new();
    for (line, fields) in rows(text, &MATCHES_HEADER)? {
        let testing = split_ids(&fields[1]);
        let expert = split_ids(&fields[2]);
        let tool = split_ids(&fields[3]);
        let group = MatchGroup::new(fields[0].clone(), &testing, &expert, &tool)
            .map_err(|source| LoadError::InvalidGroup { line, source })?;
        for (listed, id) in group.all_ids() {
            if let Some(rosters) = rosters {
                match rosters.method_of(id) {
                    None => {
                        return Err(LoadError::UnknownId {
                            line,
                            id: id.to_string(),
                        })
                    }
                    Some(actual) if actual != listed => {
                        return Err(LoadError::MethodMismatch {
                            line,
                            id: id.to_string(),
                            listed,
                            actual,
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some(first_line) = owner.insert(id.to_string(), line) {
                return Err(LoadError::DuplicateIdAcrossGroups {
                    line,
                    id: id.to_string(),
                    first_line,
                });
            }
        }
        groups.push(group);
    }
    Ok(groups)
}

pub fn load_match_table(
    path: impl AsRef<Path>,
    rosters: Option<&Rosters>,
) -> Result<Vec<MatchGroup>, LoadError> {
    let path = path.as_ref();
    in_file(path, parse_match_table(&read(path)?, rosters))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("writing to memory");
    for row in rows {
        writer.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Serializes a table in the format [`parse_assessments`] reads.
pub fn render_assessments_csv(table: &AssessmentTable) -> String {
    csv_text(
        &ASSESSMENTS_HEADER,
        table
            .entries()
            .into_iter()
            .map(|e| vec![e.issue_id, e.rater_id, e.label.code().to_string()]),
    )
}

pub fn render_rosters_csv(rosters: &Rosters) -> String {
    csv_text(
        &ROSTERS_HEADER,
        rosters.entries().iter().map(|e| {
            vec![
                e.id.clone(),
                e.method.short_name().to_string(),
                e.app.clone(),
                e.view.clone(),
                e.text.clone(),
            ]
        }),
    )
}

pub fn render_match_table_csv(groups: &[MatchGroup]) -> String {
    let cell = |ids: &[String]| {
        if ids.is_empty() {
            "/".to_string()
        } else {
            ids.join(";")
        }
    };
    csv_text(
        &MATCHES_HEADER,
        groups.iter().map(|g| {
            vec![
                g.view_name.clone(),
                cell(g.ids(MethodTag::UsabilityTesting)),
                cell(g.ids(MethodTag::ExpertReview)),
                cell(g.ids(MethodTag::ToolPrediction)),
            ]
        }),
    )
}
