use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use uxprobe::commands::{
    run_compare, run_dataset_export, run_digest, run_evaluate, run_predict, CliError,
    CompareOptions, DataSource, EvaluateOptions, GatewayChoice, KappaSelection, PredictOptions,
};
use uxprobe::config::ViewConfig;
use uxprobe::service::{self, AppState, SessionStore};
use uxprobe_core::gateway::{CompletionGateway, HttpGateway, MockGateway};
use uxprobe_core::image_prep::compressor_for;
use uxprobe_core::pipeline::Predictor;
use uxprobe_core::reporting::ReportFormat;
use uxprobe_core::ValidityRule;

/// Predict usability issues of app views and evaluate predictions against human labels.
///
/// The model API key is read from the environment variable named by the config's
/// `credential_env` key (default OPENAI_API_KEY). It is never accepted as a flag or
/// config value.
///
/// Exit codes: 0 success, 2 input error, 3 gateway error, 4 unparseable model answer.
#[derive(Debug, Parser)]
#[command(name = "uxprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict the usability issues of one view described by a config file.
    Predict {
        /// TOML config with app_overview, user_task, source, screenshot and optional model settings.
        #[arg(long)]
        config: PathBuf,
        /// Answer from this recorded fixture file instead of calling the model.
        #[arg(long, value_name = "FIXTURES")]
        mock: Option<PathBuf>,
        /// Also store the live answer in this fixture file.
        #[arg(long, value_name = "FIXTURES", conflicts_with = "mock")]
        record: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        /// Report timestamp (RFC 3339). Defaults to now, or the Unix epoch under --mock.
        #[arg(long)]
        timestamp: Option<DateTime<Utc>>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precision, recall and inter-rater agreement from assessment data.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// four_category, binary_valid, exclude_uncertain, both (first two) or all.
        #[arg(long, default_value = "all")]
        kappa_mode: KappaSelection,
        /// Which tool issues count as real: at_least_one_A or all_raters_A.
        #[arg(long, default_value = "at_least_one_A")]
        rule: ValidityRule,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlap of issues found by usability testing, expert review and the tool.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "at_least_one_A")]
        rule: ValidityRule,
        /// Also print the differences from the published study's regions.
        #[arg(long, alias = "against-paper")]
        against_published: bool,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the prompt-bundle digest a config produces (the key of mock fixtures).
    Digest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Work with the bundled study data set.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Run the HTTP service behind the triage UI.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Sessions are stored under <STATE_DIR>/sessions.
        #[arg(long)]
        state_dir: PathBuf,
        /// Answer predictions from this fixture file.
        #[arg(long, value_name = "FIXTURES")]
        mock: Option<PathBuf>,
        /// Config file to take model, endpoint and compression settings from.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built UI assets to serve at /.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum DatasetAction {
    /// Write rosters.csv, assessments.csv and matches.csv into a directory.
    Export { dir: PathBuf },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Use the bundled reference study data.
    #[arg(long, conflicts_with_all = ["assessments", "rosters", "matches"])]
    bundled: bool,
    #[arg(long)]
    assessments: Option<PathBuf>,
    #[arg(long)]
    rosters: Option<PathBuf>,
    #[arg(long)]
    matches: Option<PathBuf>,
}

impl DataArgs {
    fn source(self) -> DataSource {
        if self.bundled {
            DataSource::Bundled
        } else {
            DataSource::Files {
                assessments: self.assessments,
                rosters: self.rosters,
                matches: self.matches,
            }
        }
    }
}

fn emit(text: String, out: Option<PathBuf>) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
    }
}

async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Predict {
            config,
            mock,
            record,
            model,
            endpoint,
            timestamp,
            format,
            out,
        } => {
            let gateway = mock.map_or(GatewayChoice::Live, GatewayChoice::Mock);
            let opts = PredictOptions {
                format,
                timestamp,
                record,
                model,
                endpoint,
                ..PredictOptions::new(config, gateway)
            };
            emit(run_predict(&opts).await?, out)
        }
        Command::Evaluate {
            data,
            kappa_mode,
            rule,
            format,
            out,
        } => emit(
            run_evaluate(&EvaluateOptions {
                data: data.source(),
                kappa: kappa_mode,
                rule,
                format,
            })?,
            out,
        ),
        Command::Compare {
            data,
            rule,
            against_published,
            format,
            out,
        } => emit(
            run_compare(&CompareOptions {
                data: data.source(),
                rule,
                against_published,
                format,
            })?,
            out,
        ),
        Command::Digest { config } => emit(run_digest(&config).await?, None),
        Command::Dataset {
            action: DatasetAction::Export { dir },
        } => emit(run_dataset_export(&dir)?, None),
        Command::Serve {
            bind,
            state_dir,
            mock,
            config,
            ui_dir,
        } => {
            let config = match config {
                Some(path) => ViewConfig::load(path)?,
                None => ViewConfig::default(),
            };
            let gateway: Result<Arc<dyn CompletionGateway>, _> = match mock {
                Some(path) => Ok(Arc::new(
                    MockGateway::from_file(path).map_err(|e| CliError::Input(e.to_string()))?,
                )),
                None => HttpGateway::from_env(config.gateway_config()).map(|g| Arc::new(g) as _),
            };
            if let Err(e) = &gateway {
                tracing::warn!(error = %e, "predictions will fail until the gateway is configured");
            }
            let policy = config.compression_policy();
            let templates = config.templates()?;
            let predictor = gateway.map(|g| {
                Predictor::new(g)
                    .with_compressor(Arc::from(compressor_for(policy)))
                    .with_templates(templates)
            });
            let store = SessionStore::open(&state_dir)
                .map_err(|e| CliError::Input(format!("{}: {e}", state_dir.display())))?;
            let state = Arc::new(AppState { store, predictor });
            service::serve(bind, state, ui_dir)
                .await
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
