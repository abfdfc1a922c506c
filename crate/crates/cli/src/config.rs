//! The prediction config file: one TOML table whose keys mirror the input form.
//!
//! ```toml
//! view_id = "quiz-category-view"
//! app_overview = "a quiz app ..."
//! user_task = "choosing a quiz category"
//! source = ["Views/CategoryView.swift", "Views/Components/*.swift"]
//! screenshot = "category.png"
//! model = "gpt-4-turbo"            # optional
//! endpoint = "https://..."         # optional
//! temperature = 0.2                # optional
//! max_output_tokens = 1024         # optional
//! credential_env = "OPENAI_API_KEY" # optional, names the variable; never the key itself
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use uxprobe_core::gateway::GatewayConfig;
use uxprobe_core::image_prep::{load_screenshot, CompressionPolicy};
use uxprobe_core::prompt::PromptTemplates;
use uxprobe_core::{AppContext, SourceFile, ViewSource, ViewUnderTest, Violation};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(Violation),
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid(Violation::new(field, message))
    }
}

/// Keys a config file may set. Everything except the view inputs is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewConfig {
    pub view_id: Option<String>,
    pub app_overview: Option<String>,
    pub user_task: Option<String>,
    #[serde(default)]
    pub source: Vec<String>,
    pub screenshot: Option<PathBuf>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub credential_env: Option<String>,
    pub max_dimension_px: Option<u32>,
    /// Directory holding replacement `system_prompt.txt` and `user_prompt.txt`.
    pub templates_dir: Option<PathBuf>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl ViewConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ViewConfig = toml::from_str(&text).map_err(|e| ConfigError::Syntax {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(config)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Gateway settings: defaults overridden by whatever the file sets.
    pub fn gateway_config(&self) -> GatewayConfig {
        let mut g = GatewayConfig::default();
        if let Some(m) = &self.model {
            g.model_id = m.clone();
        }
        if let Some(e) = &self.endpoint {
            g.endpoint_url = e.clone();
        }
        if let Some(t) = self.temperature {
            g.temperature = t;
        }
        if let Some(n) = self.max_output_tokens {
            g.max_output_tokens = n;
        }
        if let Some(c) = &self.credential_env {
            g.credential_env = c.clone();
        }
        g
    }

    pub fn compression_policy(&self) -> CompressionPolicy {
        let mut p = CompressionPolicy::default();
        if let Some(d) = self.max_dimension_px {
            p.max_dimension_px = d;
        }
        p
    }

    pub fn templates(&self) -> Result<PromptTemplates, ConfigError> {
        match &self.templates_dir {
            None => Ok(PromptTemplates::default()),
            Some(dir) => PromptTemplates::from_dir(self.resolve(dir))
                .map_err(|e| ConfigError::invalid("templates_dir", e.to_string())),
        }
    }

    /// Reads the source files and screenshot. Source patterns expand in order; matches
    /// of one glob are sorted, and a file matched twice is kept once.
    pub fn load_view(&self) -> Result<ViewUnderTest, ConfigError> {
        let required = |field: &str, v: &Option<String>| {
            v.clone()
                .ok_or_else(|| ConfigError::invalid(field, "missing from config"))
        };
        let app_overview = required("app_overview", &self.app_overview)?;
        let user_task = required("user_task", &self.user_task)?;
        if self.source.is_empty() {
            return Err(ConfigError::invalid("source", "missing from config"));
        }
        let shot = self
            .screenshot
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("screenshot", "missing from config"))?;

        let mut files: Vec<SourceFile> = Vec::new();
        for pattern in &self.source {
            let full = self.resolve(Path::new(pattern));
            let full = full.to_string_lossy();
            let mut matched: Vec<PathBuf> = glob::glob(&full)
                .map_err(|e| ConfigError::invalid("source", format!("bad pattern '{pattern}': {e}")))?
                .filter_map(Result::ok)
                .filter(|p| p.is_file())
                .collect();
            if matched.is_empty() {
                return Err(ConfigError::invalid(
                    "source",
                    format!("'{pattern}' matches no files"),
                ));
            }
            matched.sort();
            for p in matched {
                let shown = p
                    .strip_prefix(&self.base_dir)
                    .unwrap_or(&p)
                    .to_string_lossy()
                    .replace('\\', "/");
                if files.iter().any(|f| f.path == shown) {
                    continue;
                }
                let contents = std::fs::read_to_string(&p).map_err(|e| {
                    ConfigError::invalid("source", format!("cannot read {}: {e}", p.display()))
                })?;
                files.push(SourceFile::new(shown, contents));
            }
        }

        let shot_path = self.resolve(shot);
        let bytes = std::fs::read(&shot_path).map_err(|e| {
            ConfigError::invalid(
                "screenshot",
                format!("cannot read {}: {e}", shot_path.display()),
            )
        })?;
        let screenshot =
            load_screenshot(bytes).map_err(|e| ConfigError::invalid("screenshot", e.to_string()))?;

        Ok(ViewUnderTest {
            view_id: self.view_id.clone().unwrap_or_else(|| "view".to_string()),
            context: AppContext::new(app_overview, user_task),
            source: ViewSource::new(files),
            screenshot,
        })
    }
}
