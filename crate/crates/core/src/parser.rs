//! Turns the model's enumerated answer into [`PredictedIssue`]s.
//!
//! Items start at a line beginning with `1.`, `1)` or `-`. Numbered markers take
//! precedence, so dashes inside a numbered item stay part of that item. An item runs
//! until the next marker line, blank lines included. Text before the first marker is
//! skipped and reported as a diagnostic. Without any markers, blank-line paragraphs are
//! the items, unless the answer is a short "no issues" statement.

use thiserror::Error;

use crate::model::PredictedIssue;

/// Longest prefix, in characters, that may still be read as an item title.
pub const TITLE_WINDOW: usize = 120;

/// Short answers containing one of these (case-insensitively) mean "nothing found".
const NO_ISSUE_PHRASES: &[&str] = &[
    "no usability issues",
    "no usability problems",
    "no issues",
    "no problems",
    "did not identify any",
    "didn't identify any",
    "could not identify any",
    "couldn't identify any",
    "did not find any",
    "didn't find any",
    "none found",
];

const NO_ISSUE_MAX_CHARS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("response is empty")]
    Empty,
    #[error("response has neither enumeration markers nor paragraphs: {excerpt}")]
    UnparseableResponse { excerpt: String },
}

/// Parsed issues plus notes about text that was skipped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedResponse {
    pub issues: Vec<PredictedIssue>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MarkerStyle {
    Numbered,
    Dash,
}

pub fn parse_issue_list(raw: &str) -> Result<Vec<PredictedIssue>, ParseError> {
    parse_response(raw).map(|p| p.issues)
}

pub fn parse_response(raw: &str) -> Result<ParsedResponse, ParseError> {
    let text = raw.replace("\r\n", "\n");
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let lines: Vec<&str> = text.split('\n').collect();

    let style = if lines.iter().any(|l| marker_len(l, MarkerStyle::Numbered).is_some()) {
        Some(MarkerStyle::Numbered)
    } else if lines.iter().any(|l| marker_len(l, MarkerStyle::Dash).is_some()) {
        Some(MarkerStyle::Dash)
    } else {
        None
    };

    let mut parsed = ParsedResponse::default();
    let items: Vec<(String, String)> = match style {
        Some(style) => {
            let starts: Vec<usize> = (0..lines.len())
                .filter(|&i| marker_len(lines[i], style).is_some())
                .collect();
            for paragraph in paragraphs(&lines[..starts[0]]) {
                parsed
                    .diagnostics
                    .push(format!("skipped text before the first item: {}", excerpt(&paragraph)));
            }
            starts
                .iter()
                .enumerate()
                .map(|(n, &start)| {
                    let end = starts.get(n + 1).copied().unwrap_or(lines.len());
                    let block = &lines[start..end];
                    let raw_text = block.join("\n").trim().to_string();
                    let first = block[0].trim_start();
                    let cut = marker_len(first, style).unwrap_or(0);
                    let mut content = first[cut..].to_string();
                    for line in &block[1..] {
                        content.push('\n');
                        content.push_str(line);
                    }
                    (raw_text, content.trim().to_string())
                })
                .collect()
        }
        None => {
            let trimmed = text.trim();
            let lower = trimmed.to_lowercase();
            if trimmed.chars().count() <= NO_ISSUE_MAX_CHARS
                && NO_ISSUE_PHRASES.iter().any(|p| lower.contains(p))
            {
                parsed
                    .diagnostics
                    .push(format!("model reported no issues: {}", excerpt(trimmed)));
                return Ok(parsed);
            }
            let paras = paragraphs(&lines);
            if paras.len() < 2 {
                return Err(ParseError::UnparseableResponse {
                    excerpt: excerpt(trimmed),
                });
            }
            paras.into_iter().map(|p| (p.clone(), p)).collect()
        }
    };

    for (raw_text, content) in items {
        if content.is_empty() {
            parsed
                .diagnostics
                .push(format!("skipped empty item: {raw_text}"));
            continue;
        }
        let (title, description) = split_item(&content);
        parsed.issues.push(PredictedIssue {
            ordinal: parsed.issues.len() as u32 + 1,
            title,
            description,
            raw_text,
        });
    }
    Ok(parsed)
}

/// Splits `Title: explanation`. The first colon outside a double-quoted span, followed
/// by whitespace and lying within the first [`TITLE_WINDOW`] characters, separates the
/// two; otherwise the whole text is the description.
pub fn split_title(item_text: &str) -> (Option<String>, String) {
    let text = item_text.trim();
    let mut in_straight = false;
    let mut curly_depth = 0usize;
    let mut chars = text.char_indices().enumerate().peekable();
    while let Some((pos, (byte, c))) = chars.next() {
        if pos >= TITLE_WINDOW {
            break;
        }
        match c {
            '"' => in_straight = !in_straight,
            '“' => curly_depth += 1,
            '”' => curly_depth = curly_depth.saturating_sub(1),
            ':' if !in_straight && curly_depth == 0 => {
                let followed_by_space = chars
                    .peek()
                    .is_none_or(|(_, (_, next))| next.is_whitespace());
                if !followed_by_space {
                    continue;
                }
                let title = text[..byte].trim();
                let rest = text[byte + 1..].trim();
                if title.is_empty() || rest.is_empty() {
                    break;
                }
                return (Some(title.to_string()), rest.to_string());
            }
            _ => {}
        }
    }
    (None, text.to_string())
}

/// Like [`split_title`], but also accepts a bold title such as `**Title:** text` or
/// `**Title**: text`.
fn split_item(content: &str) -> (Option<String>, String) {
    if let Some(inner) = content.strip_prefix("**") {
        if let Some(close) = inner.find("**") {
            let bold = &inner[..close];
            let after = &inner[close + 2..];
            if bold.chars().count() <= TITLE_WINDOW {
                if let Some(title) = bold.strip_suffix(':') {
                    let rest = after.trim();
                    if !title.trim().is_empty() && !rest.is_empty() {
                        return (Some(title.trim().to_string()), rest.to_string());
                    }
                } else if let Some(rest) = after.strip_prefix(':') {
                    let rest = rest.trim();
                    if !bold.trim().is_empty() && !rest.is_empty() {
                        return (Some(bold.trim().to_string()), rest.to_string());
                    }
                }
            }
        }
    }
    split_title(content)
}

/// Serializes item texts in the enumerated format the system prompt asks for.
pub fn render_enumerated<S: AsRef<str>>(items: &[S]) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        out.push_str(&format!("{}. {}\n\n", i + 1, item.as_ref()));
    }
    out
}

/// Byte length of the item marker at the start of `line`, trailing space included.
fn marker_len(line: &str, style: MarkerStyle) -> Option<usize> {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let rest = &line[indent..];
    let after_marker = match style {
        MarkerStyle::Numbered => {
            let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
            if digits == 0 || digits > 3 {
                return None;
            }
            match rest.as_bytes().get(digits) {
                Some(b'.') | Some(b')') => digits + 1,
                _ => return None,
            }
        }
        MarkerStyle::Dash => {
            if !rest.starts_with('-') || rest.starts_with("--") {
                return None;
            }
            1
        }
    };
    let tail = &rest[after_marker..];
    if !tail.is_empty() && !tail.starts_with([' ', '\t']) {
        return None;
    }
    let spaces = tail.len() - tail.trim_start_matches([' ', '\t']).len();
    Some(indent + after_marker + spaces)
}

fn paragraphs(lines: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n").trim().to_string());
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n").trim().to_string());
    }
    out
}

fn excerpt(text: &str) -> String {
    let mut s: String = text.chars().take(80).collect();
    if text.chars().count() > 80 {
        s.push('…');
    }
    s.replace('\n', " ")
}
