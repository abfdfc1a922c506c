//! System and user prompt assembly.
//!
//! Both prompts come from template resources. The shipped templates are compiled in;
//! [`PromptTemplates::from_dir`] loads replacements for prompt experiments. The user
//! template has three placeholders, `{app_overview}`, `{user_task}` and `{source_code}`,
//! which are substituted in a single pass so that inserted text is never re-expanded.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{AppContext, ScreenshotImage, ViewSource, ViewUnderTest};

/// File name of the system template inside a template directory.
pub const SYSTEM_TEMPLATE_FILE: &str = "system_prompt.txt";
/// File name of the user template inside a template directory.
pub const USER_TEMPLATE_FILE: &str = "user_prompt.txt";

const SHIPPED_SYSTEM: &str = include_str!("../templates/system_prompt.txt");
const SHIPPED_USER: &str = include_str!("../templates/user_prompt.txt");

const PLACEHOLDERS: [&str; 3] = ["app_overview", "user_task", "source_code"];

/// Anchors that open each user-prompt section, in template order.
pub const USER_SECTION_ANCHORS: [&str; 4] = [
    "I have an iOS app about:",
    "The user's task in this app view is about:",
    "An image of the app view is provided.",
    "Source Code:",
];

/// Prefix of the header line written before each source file.
pub const FILE_HEADER_PREFIX: &str = "// File: ";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("view source is {chars} characters, above the cap of {limit}")]
    SourceTooLarge { chars: usize, limit: usize },
    #[error("failed to read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("user template must contain {{{0}}} exactly once")]
    BadTemplate(String),
}

/// System text, user text and screenshot for one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub image: ScreenshotImage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    system: String,
    user: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            system: SHIPPED_SYSTEM.to_string(),
            user: SHIPPED_USER.to_string(),
        }
    }
}

impl PromptTemplates {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Result<Self, PromptError> {
        let user = user.into();
        for name in PLACEHOLDERS {
            if user.matches(&format!("{{{name}}}")).count() != 1 {
                return Err(PromptError::BadTemplate(name.to_string()));
            }
        }
        Ok(Self {
            system: system.into(),
            user,
        })
    }

    /// Loads `system_prompt.txt` and `user_prompt.txt` from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let read = |name: &str| {
            let path = dir.as_ref().join(name);
            fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        Self::new(read(SYSTEM_TEMPLATE_FILE)?, read(USER_TEMPLATE_FILE)?)
    }

    pub fn system_template(&self) -> &str {
        &self.system
    }

    pub fn user_template(&self) -> &str {
        &self.user
    }

    pub fn system_prompt(&self) -> String {
        self.system.clone()
    }

    pub fn user_prompt(
        &self,
        context: &AppContext,
        source: &ViewSource,
        source_limit: usize,
    ) -> Result<String, PromptError> {
        let chars = source.total_chars();
        if chars > source_limit {
            return Err(PromptError::SourceTooLarge {
                chars,
                limit: source_limit,
            });
        }
        let code = concatenate_source(source);
        Ok(substitute(&self.user, |name| match name {
            "app_overview" => Some(context.app_overview.as_str()),
            "user_task" => Some(context.user_task.as_str()),
            "source_code" => Some(code.as_str()),
            _ => None,
        }))
    }

    /// Builds the bundle for a view. The caller is expected to have validated the view
    /// and compressed its screenshot.
    pub fn assemble(
        &self,
        view: &ViewUnderTest,
        source_limit: usize,
    ) -> Result<PromptBundle, PromptError> {
        Ok(PromptBundle {
            system_text: self.system_prompt(),
            user_text: self.user_prompt(&view.context, &view.source, source_limit)?,
            image: view.screenshot.clone(),
        })
    }
}

/// The shipped system prompt.
pub fn build_system_prompt() -> String {
    SHIPPED_SYSTEM.to_string()
}

/// The shipped user prompt with the context and source substituted.
pub fn build_user_prompt(
    context: &AppContext,
    source: &ViewSource,
    source_limit: usize,
) -> Result<String, PromptError> {
    PromptTemplates::default().user_prompt(context, source, source_limit)
}

/// Bundle built from the shipped templates.
pub fn assemble_bundle(view: &ViewUnderTest, source_limit: usize) -> Result<PromptBundle, PromptError> {
    PromptTemplates::default().assemble(view, source_limit)
}

/// Files in list order, each preceded by a `// File: <path>` line.
fn concatenate_source(source: &ViewSource) -> String {
    let mut out = String::new();
    for file in &source.files {
        if !out.is_empty() && !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(FILE_HEADER_PREFIX);
        out.push_str(&file.path);
        out.push('\n');
        out.push_str(&file.contents);
    }
    out
}

fn substitute<'a>(template: &str, lookup: impl Fn(&str) -> Option<&'a str>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').and_then(|close| {
            lookup(&after[..close]).map(|value| (value, close))
        }) {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
