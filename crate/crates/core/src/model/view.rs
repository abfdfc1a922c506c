//! Inputs of a single prediction run: app context, view source, screenshot.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Default upper bound on each app-context field, in characters.
pub const DEFAULT_CONTEXT_FIELD_LIMIT: usize = 2_000;

/// Default upper bound on the concatenated view source, in characters.
pub const DEFAULT_SOURCE_LIMIT: usize = 60_000;

/// Free-text description of the app and of what the user wants to do in the view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppContext {
    /// App-store style description of the app.
    pub app_overview: String,
    /// Main goal of interacting with the analysed view.
    pub user_task: String,
}

impl AppContext {
    pub fn new(app_overview: impl Into<String>, user_task: impl Into<String>) -> Self {
        Self {
            app_overview: app_overview.into(),
            user_task: user_task.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    /// Path relative to the project root, shown to the model as a header line.
    pub path: String,
    pub contents: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            contents: contents.into(),
        }
    }
}

/// Declarative UI source files of one view, in prompt order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewSource {
    pub files: Vec<SourceFile>,
    /// Informational tag for the UI dialect, e.g. `swiftui`.
    pub framework: String,
}

impl ViewSource {
    pub fn new(files: Vec<SourceFile>) -> Self {
        Self {
            files,
            framework: "swiftui".to_string(),
        }
    }

    /// Total size of all file contents in characters.
    pub fn total_chars(&self) -> usize {
        self.files.iter().map(|f| f.contents.chars().count()).sum()
    }
}

/// Image encodings accepted for screenshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Png,
    Jpeg,
}

impl MediaType {
    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }

    /// Identifies the encoding from the payload's magic bytes.
    pub fn sniff(bytes: &[u8]) -> Option<MediaType> {
        const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
        if bytes.starts_with(PNG_MAGIC) {
            Some(MediaType::Png)
        } else if bytes.len() >= 3 && bytes[..3] == [0xFF, 0xD8, 0xFF] {
            Some(MediaType::Jpeg)
        } else {
            None
        }
    }

    pub fn from_name(name: &str) -> Option<MediaType> {
        match name.trim().to_ascii_lowercase().as_str() {
            "png" | "image/png" => Some(MediaType::Png),
            "jpg" | "jpeg" | "image/jpeg" => Some(MediaType::Jpeg),
            _ => None,
        }
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mime())
    }
}

/// An encoded screenshot or design export of the view.
#[derive(Clone, PartialEq, Eq)]
pub struct ScreenshotImage {
    pub bytes: Vec<u8>,
    pub media_type: MediaType,
    pub width_px: u32,
    pub height_px: u32,
}

impl fmt::Debug for ScreenshotImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScreenshotImage")
            .field("bytes", &format_args!("<{} bytes>", self.bytes.len()))
            .field("media_type", &self.media_type)
            .field("width_px", &self.width_px)
            .field("height_px", &self.height_px)
            .finish()
    }
}

/// Everything one prediction run consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewUnderTest {
    pub view_id: String,
    pub context: AppContext,
    pub source: ViewSource,
    pub screenshot: ScreenshotImage,
}

/// Configurable size caps applied by [`validate_view`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLimits {
    pub context_field_chars: usize,
    pub source_chars: usize,
}

impl Default for InputLimits {
    fn default() -> Self {
        Self {
            context_field_chars: DEFAULT_CONTEXT_FIELD_LIMIT,
            source_chars: DEFAULT_SOURCE_LIMIT,
        }
    }
}

/// One broken invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every input invariant; an empty result means the view is usable.
pub fn validate_view(view: &ViewUnderTest, limits: &InputLimits) -> Vec<Violation> {
    let mut out = Vec::new();

    if view.view_id.trim().is_empty() {
        out.push(Violation::new("view_id", "must not be empty"));
    }

    for (field, value) in [
        ("app_overview", &view.context.app_overview),
        ("user_task", &view.context.user_task),
    ] {
        if value.trim().is_empty() {
            out.push(Violation::new(field, "must not be empty"));
        } else {
            let chars = value.chars().count();
            if chars > limits.context_field_chars {
                out.push(Violation::new(
                    field,
                    format!(
                        "{chars} characters exceeds the limit of {}",
                        limits.context_field_chars
                    ),
                ));
            }
        }
    }

    if view.source.files.is_empty() {
        out.push(Violation::new("source", "at least one source file is required"));
    }
    for (idx, file) in view.source.files.iter().enumerate() {
        if file.path.trim().is_empty() {
            out.push(Violation::new(
                format!("source.files[{idx}].path"),
                "must not be empty",
            ));
        }
        if file.contents.trim().is_empty() {
            out.push(Violation::new(
                format!("source.files[{idx}].contents"),
                format!("file '{}' is empty", file.path),
            ));
        }
    }
    let total = view.source.total_chars();
    if total > limits.source_chars {
        out.push(Violation::new(
            "source",
            format!(
                "total size {total} characters exceeds the source size cap of {}",
                limits.source_chars
            ),
        ));
    }

    let shot = &view.screenshot;
    if shot.bytes.is_empty() {
        out.push(Violation::new("screenshot", "image payload is empty"));
    } else {
        match MediaType::sniff(&shot.bytes) {
            Some(found) if found == shot.media_type => {}
            Some(found) => out.push(Violation::new(
                "screenshot.media_type",
                format!("declared {} but payload is {}", shot.media_type, found),
            )),
            None => out.push(Violation::new(
                "screenshot.media_type",
                "payload is neither PNG nor JPEG",
            )),
        }
    }
    if shot.width_px == 0 || shot.height_px == 0 {
        out.push(Violation::new(
            "screenshot.dimensions",
            format!("{}x{} is not a valid size", shot.width_px, shot.height_px),
        ));
    }

    out
}
