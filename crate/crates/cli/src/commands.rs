//! The work behind each subcommand, returning rendered output so tests can call it
//! without spawning the binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use thiserror::Error;
use uxprobe_core::evaluation::{
    build_universe, compute_metrics, overlap_summary, valid_tool_issue_ids, EvaluationError,
    MetricsOptions,
};
use uxprobe_core::gateway::{
    bundle_digest, CompletionGateway, FixtureFile, GatewayError, HttpGateway, MockGateway, RecordingGateway,
};
use uxprobe_core::image_prep::compressor_for;
use uxprobe_core::pipeline::{ErrorClass, PredictError, Predictor};
use uxprobe_core::reporting::{
    load_assessments, load_match_table, load_rosters, published_overlap, render_issue_report,
    render_metrics_report, render_overlap_report, DatasetBundle, LoadError, ReportFormat,
};
use uxprobe_core::{AssessmentTable, KappaMode, MatchGroup, MethodTag, Rosters, ValidityRule};

use crate::config::{ConfigError, ViewConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Gateway(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => ErrorClass::Input.exit_code(),
            CliError::Gateway(_) => ErrorClass::Gateway.exit_code(),
            CliError::Parse(_) => ErrorClass::Parse.exit_code(),
            CliError::Output(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match (&e, e.class()) {
            (PredictError::Gateway(GatewayError::ContentPolicyRefusal { message }), _) => {
                CliError::Gateway(format!("content policy refusal (not retryable): {message}"))
            }
            (_, ErrorClass::Input) => CliError::Input(e.to_string()),
            (_, ErrorClass::Gateway) => CliError::Gateway(e.to_string()),
            (_, ErrorClass::Parse) => CliError::Parse(e.to_string()),
        }
    }
}

/// Where model answers come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewayChoice {
    /// The configured endpoint, with the key from the configured environment variable.
    Live,
    /// Recorded answers from a fixture file.
    Mock(PathBuf),
}

#[derive(Debug, Clone)]
pub struct PredictOptions {
    pub config: PathBuf,
    pub gateway: GatewayChoice,
    pub format: ReportFormat,
    /// Report timestamp. Mock runs default to the Unix epoch so reruns are byte-identical.
    pub timestamp: Option<DateTime<Utc>>,
    /// Save every live answer to this fixture file for later mock runs.
    pub record: Option<PathBuf>,
    /// Overrides the config's `model` key.
    pub model: Option<String>,
    /// Overrides the config's `endpoint` key.
    pub endpoint: Option<String>,
}

impl PredictOptions {
    pub fn new(config: impl Into<PathBuf>, gateway: GatewayChoice) -> Self {
        Self {
            config: config.into(),
            gateway,
            format: ReportFormat::Json,
            timestamp: None,
            record: None,
            model: None,
            endpoint: None,
        }
    }
}

fn predictor_for(config: &ViewConfig, gateway: Arc<dyn CompletionGateway>) -> Result<Predictor, CliError> {
    let policy = config.compression_policy();
    policy
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Predictor::new(gateway)
        .with_compressor(Arc::from(compressor_for(policy)))
        .with_templates(config.templates()?))
}

/// Validates, compresses, prompts, parses and renders one view.
pub async fn run_predict(opts: &PredictOptions) -> Result<String, CliError> {
    let mut config = ViewConfig::load(&opts.config)?;
    if opts.model.is_some() {
        config.model = opts.model.clone();
    }
    if opts.endpoint.is_some() {
        config.endpoint = opts.endpoint.clone();
    }
    let view = config.load_view()?;

    let report = match &opts.gateway {
        GatewayChoice::Mock(path) => {
            let mock = MockGateway::from_file(path).map_err(|e| CliError::Input(e.to_string()))?;
            let at = opts.timestamp.unwrap_or(DateTime::UNIX_EPOCH);
            predictor_for(&config, Arc::new(mock))?.predict(&view, at).await?
        }
        GatewayChoice::Live => {
            let live = HttpGateway::from_env(config.gateway_config()).map_err(PredictError::Gateway)?;
            let at = opts.timestamp.unwrap_or_else(Utc::now);
            match &opts.record {
                None => predictor_for(&config, Arc::new(live))?.predict(&view, at).await?,
                Some(path) => {
                    let recorder = Arc::new(RecordingGateway::new(live));
                    let report = predictor_for(&config, recorder.clone())?.predict(&view, at).await;
                    merge_fixtures(path, recorder.fixtures())?;
                    report?
                }
            }
        }
    };
    Ok(render_issue_report(&report, opts.format))
}

fn merge_fixtures(path: &Path, fresh: FixtureFile) -> Result<(), CliError> {
    let mut file = if path.exists() {
        FixtureFile::load(path).map_err(|e| CliError::Output(e.to_string()))?
    } else {
        FixtureFile {
            model_id: fresh.model_id.clone(),
            ..Default::default()
        }
    };
    file.responses.extend(fresh.responses);
    file.save(path).map_err(|e| CliError::Output(e.to_string()))
}

/// Digest of the prompt bundle a config produces; the key mock fixtures are stored under.
pub async fn run_digest(config_path: &Path) -> Result<String, CliError> {
    let config = ViewConfig::load(config_path)?;
    let view = config.load_view()?;
    let gateway = Arc::new(MockGateway::from_responses(
        config.gateway_config().model_id,
        Default::default(),
    ));
    let bundle = predictor_for(&config, gateway)?.prepare(&view).await?;
    Ok(format!("{}\n", bundle_digest(&bundle)))
}

/// Assessment, roster and match files, or the bundled study data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Bundled,
    Files {
        assessments: Option<PathBuf>,
        rosters: Option<PathBuf>,
        matches: Option<PathBuf>,
    },
}

struct Loaded {
    assessments: Option<AssessmentTable>,
    matching: Option<(Rosters, Vec<MatchGroup>)>,
}

fn load_data(source: &DataSource) -> Result<Loaded, CliError> {
    match source {
        DataSource::Bundled => {
            let b = DatasetBundle::bundled();
            Ok(Loaded {
                assessments: Some(b.assessments),
                matching: Some((b.rosters, b.match_groups)),
            })
        }
        DataSource::Files {
            assessments,
            rosters,
            matches,
        } => {
            let assessments = assessments.as_ref().map(load_assessments).transpose()?;
            let matching = match (rosters, matches) {
                (Some(r), Some(m)) => {
                    let rosters = load_rosters(r)?;
                    let groups = load_match_table(m, Some(&rosters))?;
                    Some((rosters, groups))
                }
                (None, None) => None,
                _ => {
                    return Err(CliError::Input(
                        "--rosters and --matches must be given together".into(),
                    ))
                }
            };
            Ok(Loaded {
                assessments,
                matching,
            })
        }
    }
}

/// Which kappa modes `evaluate` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaSelection {
    One(KappaMode),
    /// Four-category and binary.
    Both,
    All,
}

impl KappaSelection {
    pub fn modes(self) -> Vec<KappaMode> {
        match self {
            KappaSelection::One(m) => vec![m],
            KappaSelection::Both => vec![KappaMode::FourCategory, KappaMode::BinaryValid],
            KappaSelection::All => KappaMode::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for KappaSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(KappaSelection::Both),
            "all" => Ok(KappaSelection::All),
            other => other.parse().map(KappaSelection::One),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub data: DataSource,
    pub kappa: KappaSelection,
    pub rule: ValidityRule,
    pub format: ReportFormat,
}

pub fn run_evaluate(opts: &EvaluateOptions) -> Result<String, CliError> {
    let data = load_data(&opts.data)?;
    let table = data
        .assessments
        .ok_or_else(|| CliError::Input("evaluate needs --assessments or --bundled".into()))?;
    let options = MetricsOptions {
        rule: opts.rule,
        kappa_modes: opts.kappa.modes(),
    };
    let matching = data.matching.as_ref().map(|(r, g)| (r, g.as_slice()));
    let report = compute_metrics(&table, matching, &options)?;
    Ok(render_metrics_report(&report, opts.format))
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub data: DataSource,
    pub rule: ValidityRule,
    /// Print deltas against the published reference regions.
    pub against_published: bool,
    pub format: ReportFormat,
}

/// Seven-region overlap of the three methods. Without assessments every tool issue counts
/// as real.
pub fn run_compare(opts: &CompareOptions) -> Result<String, CliError> {
    let data = load_data(&opts.data)?;
    let (rosters, groups) = data
        .matching
        .ok_or_else(|| CliError::Input("compare needs --rosters and --matches, or --bundled".into()))?;
    let valid = match &data.assessments {
        Some(table) => valid_tool_issue_ids(table, opts.rule),
        None => rosters
            .ids(MethodTag::ToolPrediction)
            .into_iter()
            .map(str::to_string)
            .collect(),
    };
    let summary = overlap_summary(&build_universe(&rosters, &groups, &valid)?);
    let reference = opts.against_published.then(published_overlap);
    Ok(render_overlap_report(&summary, reference.as_ref(), opts.format))
}

/// Writes the bundled CSV files into `dir`.
pub fn run_dataset_export(dir: &Path) -> Result<String, CliError> {
    DatasetBundle::export_bundled(dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    Ok(format!("wrote bundled data set to {}\n", dir.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_selection_names() {
        assert_eq!("both".parse::<KappaSelection>().unwrap().modes().len(), 2);
        assert_eq!("all".parse::<KappaSelection>().unwrap().modes().len(), 3);
        assert_eq!(
            "binary_valid".parse::<KappaSelection>().unwrap(),
            KappaSelection::One(KappaMode::BinaryValid)
        );
        assert!("three".parse::<KappaSelection>().is_err());
    }

    #[test]
    fn bundled_evaluate_and_compare() {
        let md = run_evaluate(&EvaluateOptions {
            data: DataSource::Bundled,
            kappa: KappaSelection::All,
            rule: ValidityRule::AtLeastOneA,
            format: ReportFormat::Markdown,
        })
        .unwrap();
        for needle in ["0.61", "0.66", "0.35", "0.38"] {
            assert!(md.contains(needle), "{needle}");
        }
        let overlap = run_compare(&CompareOptions {
            data: DataSource::Bundled,
            rule: ValidityRule::AtLeastOneA,
            against_published: true,
            format: ReportFormat::Markdown,
        })
        .unwrap();
        assert!(overlap.contains("all three"));
    }

    #[test]
    fn half_a_matching_is_rejected() {
        let err = run_compare(&CompareOptions {
            data: DataSource::Files {
                assessments: None,
                rosters: Some("r.csv".into()),
                matches: None,
            },
            rule: ValidityRule::AtLeastOneA,
            against_published: false,
            format: ReportFormat::Json,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn refusal_message_is_distinct() {
        let e: CliError = PredictError::Gateway(GatewayError::ContentPolicyRefusal {
            message: "no".into(),
        })
        .into();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().starts_with("content policy refusal"));
    }
}
