//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p uxprobe --test acceptance`.

#[path = "common/mod.rs"]
mod common;

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::DateTime;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::{json, Value};
use uxprobe::commands::{run_evaluate, DataSource, EvaluateOptions, KappaSelection};
use uxprobe::config::ViewConfig;
use uxprobe_core::evaluation::{
    build_universe, cohens_kappa, compute_metrics, overlap_summary, valid_tool_issue_ids,
    EvaluationError, MetricsOptions,
};
use uxprobe_core::gateway::{GatewayConfig, HttpGateway, MockGateway, RecordingGateway, RetryPolicy};
use uxprobe_core::parser::{parse_issue_list, render_enumerated};
use uxprobe_core::pipeline::Predictor;
use uxprobe_core::prompt::{build_system_prompt, build_user_prompt};
use uxprobe_core::reporting::{
    overlap_deltas, parse_metrics_report_json, published_overlap, render_assessments_csv,
    DatasetBundle, ReportFormat,
};
use uxprobe_core::{
    AppContext, AssessmentLabel, AssessmentTable, ConfusionCounts, KappaMode, MethodTag,
    Proportion, SourceFile, ValidityRule, ViewSource,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn bundled_evaluate() -> Result<uxprobe_core::MetricsReport, String> {
    let text = run_evaluate(&EvaluateOptions {
        data: DataSource::Bundled,
        kappa: KappaSelection::All,
        rule: ValidityRule::AtLeastOneA,
        format: ReportFormat::Json,
    })
    .map_err(|e| e.to_string())?;
    parse_metrics_report_json(&text).map_err(|e| e.to_string())
}

fn confusion_counts() -> Outcome {
    let start = Instant::now();
    let report = bundled_evaluate()?;
    let elapsed = start.elapsed();
    let counts = |r: &str| report.rater(r).map(|m| m.counts.clone());
    check(
        counts("E1") == Some(ConfusionCounts::new("E1", 27, 13, 5, 4)),
        format!("E1 = {:?}", counts("E1")),
    )?;
    check(
        counts("E2") == Some(ConfusionCounts::new("E2", 31, 12, 2, 4)),
        format!("E2 = {:?}", counts("E2")),
    )?;
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("E1 27/13/5/4, E2 31/12/2/4 in {} ms", elapsed.as_millis()))
}

fn precision_recall() -> Outcome {
    let report = bundled_evaluate()?;
    let mut shown = Vec::new();
    for (rater, p, r) in [("E1", (27, 44), (27, 78)), ("E2", (31, 47), (31, 82))] {
        let m = report.rater(rater).ok_or(format!("no rater {rater}"))?;
        let got_p = m.precision.proportion();
        let got_r = m.recall.proportion();
        check(got_p == Proportion::new(p.0, p.1), format!("{rater} precision {got_p:?}"))?;
        check(got_r == Proportion::new(r.0, r.1), format!("{rater} recall {got_r:?}"))?;
        shown.push((got_p.unwrap().to_decimal(2), got_r.unwrap().to_decimal(2)));
    }
    let decimals = [&shown[0].0, &shown[1].0, &shown[0].1, &shown[1].1];
    check(decimals == ["0.61", "0.66", "0.35", "0.38"], format!("decimals {decimals:?}"))?;
    let fns = report.false_negatives.ok_or("no false negatives")?.records;
    check(fns == 51, format!("false negatives {fns}"))?;
    Ok("27/44 31/47 27/78 31/82 -> 0.61 0.66 0.35 0.38, FN 51".into())
}

/// Direct-formula kappa over an explicit category mapping, coded without the crate.
fn oracle_kappa(x: &[u8], y: &[u8], mode: KappaMode) -> Option<Option<f64>> {
    let pairs: Vec<(u8, u8)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| mode != KappaMode::ExcludeUncertain || (**a != 2 && **b != 2))
        .map(|(&a, &b)| match mode {
            KappaMode::BinaryValid => (u8::from(a == 0), u8::from(b == 0)),
            _ => (a, b),
        })
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let agree = pairs.iter().filter(|(a, b)| a == b).count() as f64;
    let mut chance = 0.0;
    let mut chance_int = 0usize;
    for cat in 0..4u8 {
        let cx = pairs.iter().filter(|(a, _)| *a == cat).count();
        let cy = pairs.iter().filter(|(_, b)| *b == cat).count();
        chance += (cx as f64 / n) * (cy as f64 / n);
        chance_int += cx * cy;
    }
    if chance_int == pairs.len() * pairs.len() {
        return Some(None);
    }
    Some(Some((agree / n - chance) / (1.0 - chance)))
}

fn kappa() -> Outcome {
    let bundle = DatasetBundle::bundled();
    let mut values = Vec::new();
    for mode in KappaMode::ALL {
        let k = cohens_kappa(&bundle.assessments, "E1", "E2", mode).map_err(|e| e.to_string())?;
        values.push((mode, k.value.ok_or("undefined kappa")?));
    }
    let matching: Vec<_> = values.iter().filter(|(_, v)| (v - 0.53).abs() <= 0.01).collect();
    let listing = values
        .iter()
        .map(|(m, v)| format!("{m} {v:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(!matching.is_empty(), format!("no mode within 0.53 +/- 0.01 ({listing})"))?;

    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let labels = prop::collection::vec((0u8..4, 0u8..4), 1..=12);
    runner
        .run(&labels, |pairs| {
            let mut table = AssessmentTable::new();
            for (i, (a, b)) in pairs.iter().enumerate() {
                table.insert(format!("I{i}"), "X", AssessmentLabel::ALL[*a as usize]).unwrap();
                table.insert(format!("I{i}"), "Y", AssessmentLabel::ALL[*b as usize]).unwrap();
            }
            let (x, y): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            for mode in KappaMode::ALL {
                match (cohens_kappa(&table, "X", "Y", mode), oracle_kappa(&x, &y, mode)) {
                    (Err(EvaluationError::EmptyItemSet { .. }), None) => {}
                    (Ok(k), Some(None)) => prop_assert!(k.value.is_none()),
                    (Ok(k), Some(Some(want))) => {
                        let got = k.value.unwrap_or(f64::NAN);
                        prop_assert!((got - want).abs() <= 1e-12, "{mode}: {got} vs {want}");
                    }
                    (got, want) => prop_assert!(false, "{mode}: {got:?} vs {want:?}"),
                }
            }
            Ok(())
        })
        .map_err(|e| format!("oracle mismatch: {e}"))?;
    let names: Vec<String> = matching.iter().map(|(m, v)| format!("{m} = {v:.4}")).collect();
    Ok(format!("{} ({listing}); oracle agrees on 200 random tables", names.join(", ")))
}

fn overlap() -> Outcome {
    use MethodTag::{ExpertReview as E, ToolPrediction as L, UsabilityTesting as T};
    let b = DatasetBundle::bundled();
    let valid = valid_tool_issue_ids(&b.assessments, ValidityRule::AtLeastOneA);
    let universe = build_universe(&b.rosters, &b.match_groups, &valid).map_err(|e| e.to_string())?;
    let s = overlap_summary(&universe);
    s.check_sums()?;
    let deltas = overlap_deltas(&s, &published_overlap());
    let delta_text = deltas
        .iter()
        .map(|d| format!("{} {:+}", d.label, d.delta))
        .collect::<Vec<_>>()
        .join(", ");
    let exact = [
        ("all three", s.triple(), 9),
        ("testing and expert only", s.pairwise_only(T, E), 6),
        ("testing and tool only", s.pairwise_only(T, L), 3),
        ("expert and tool only", s.pairwise_only(E, L), 9),
    ];
    let wrong: Vec<String> = exact
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name} = {got}, expected {want}"))
        .collect();
    check(wrong.is_empty(), format!("{}; deltas: {delta_text}", wrong.join("; ")))?;
    check(
        deltas.iter().all(|d| d.delta.abs() <= 2),
        format!("delta above 2: {delta_text}"),
    )?;
    Ok(format!("regions match; deltas: {delta_text}"))
}

fn prompts() -> Outcome {
    let system = build_system_prompt();
    for sentence in [
        "You are a UX expert for mobile apps.",
        "Your task is to identify usability issues with the information you get for an app's view.",
        "An example of a usability issue could be: 'Lack of visual feedback on user interactions'.",
        "Respond using app domain language; you must not use technical terminology or mention code details.",
        "Enumerate the problems identified; add an empty paragraph after each enumeration; no preceding or following text.",
    ] {
        check(system.contains(sentence), format!("system prompt lacks: {sentence}"))?;
    }

    let dir = common::fixture_dir();
    let code = std::fs::read_to_string(dir.join("CategoryView.swift")).map_err(|e| e.to_string())?;
    let context = AppContext::new("OVERVIEW-MARK quiz app", "TASK-MARK pick a category");
    let source = ViewSource::new(vec![SourceFile::new("CategoryView.swift", code.clone())]);
    let user = build_user_prompt(&context, &source, 60_000).map_err(|e| e.to_string())?;
    let expected_prefix = "I have an iOS app about: OVERVIEW-MARK quiz app\n\n\
        The user's task in this app view is about: TASK-MARK pick a category.\n\n\
        An image of the app view is provided.\n\n\
        Below is the incomplete SwiftUI code for the app view.\n\
        This code includes the view's user interface and a view model for logic handling.\n\
        It may also include additional components like subviews, models, or preview code.\n\
        Source Code:\n";
    check(user.starts_with(expected_prefix), format!("user prompt head differs:\n{user}"))?;
    let rest = &user[expected_prefix.len()..];
    check(
        rest.starts_with("// File: CategoryView.swift\n") && rest.contains(code.trim_end()),
        "source code not placed after the Source Code anchor",
    )?;
    let again = (build_system_prompt(), build_user_prompt(&context, &source, 60_000).unwrap());
    check(again == (system, user), "prompts differ between runs")?;
    Ok("system sentences verbatim, user anchors in order with inputs substituted, stable".into())
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn parser_round_trip() -> Outcome {
    let b = DatasetBundle::bundled();
    let texts: Vec<&str> = b
        .rosters
        .entries()
        .iter()
        .filter(|e| e.method == MethodTag::ToolPrediction)
        .map(|e| e.text.as_str())
        .collect();
    check(texts.len() == 49, format!("{} tool texts", texts.len()))?;
    let issues = parse_issue_list(&render_enumerated(&texts)).map_err(|e| e.to_string())?;
    check(issues.len() == 49, format!("parsed {} issues", issues.len()))?;
    for (issue, text) in issues.iter().zip(&texts) {
        check(issue.display_text() == *text, format!("changed: {text}"))?;
        check(text.ends_with(&issue.description), format!("description differs: {text}"))?;
    }

    let line = "[A-Za-z][A-Za-z0-9 ,.'!?():-]{0,60}";
    let item = prop::collection::vec(line, 1..3).prop_map(|lines| {
        lines
            .iter()
            .map(|l| l.trim().to_string())
            .collect::<Vec<_>>()
            .join("\n")
    });
    let items = prop::collection::vec(item, 1..12);
    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&items, |items| {
            let raw = render_enumerated(&items);
            let parsed = parse_issue_list(&raw).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(parsed.len(), items.len());
            let mut got = String::new();
            for (i, issue) in parsed.iter().enumerate() {
                let marker = format!("{}.", i + 1);
                prop_assert!(issue.raw_text.starts_with(&marker));
                prop_assert!(raw.contains(&issue.raw_text));
                got.push_str(&squash(&issue.raw_text[marker.len()..]));
            }
            let want: String = items.iter().map(|t| squash(t)).collect();
            prop_assert_eq!(got, want);
            Ok(())
        })
        .map_err(|e| format!("property failed: {e}"))?;
    Ok("49/49 texts round-trip; 500 random lists keep every character".into())
}

fn mock_end_to_end(rt: &tokio::runtime::Runtime) -> Outcome {
    let start = Instant::now();
    let config = common::view_config();
    let fixtures = common::mock_fixtures();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_uxprobe"))
            .args(["predict", "--config"])
            .arg(&config)
            .arg("--mock")
            .arg(&fixtures)
            .env_remove("OPENAI_API_KEY")
            .output()
            .map_err(|e| e.to_string())
    };
    let first = run()?;
    let second = run()?;
    check(first.status.success(), format!("exit {:?}", first.status.code()))?;
    check(first.stdout == second.stdout, "reports differ between runs")?;
    let report: Value = serde_json::from_slice(&first.stdout).map_err(|e| e.to_string())?;
    let n = report["issues"].as_array().map_or(0, Vec::len);
    check(n == 7, format!("{n} issues"))?;

    let identical = rt.block_on(async {
        let body: Value = serde_json::from_str(
            &std::fs::read_to_string(common::fixture_dir().join("chat_completion_response.json")).unwrap(),
        )
        .unwrap();
        let app = axum::Router::new().route(
            "/v1/chat/completions",
            axum::routing::post(move || {
                let body = body.clone();
                async move { axum::Json(body) }
            }),
        );
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let server = tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        let gw = GatewayConfig {
            endpoint_url: format!("http://{addr}/v1/chat/completions"),
            retry: RetryPolicy {
                max_attempts: 1,
                ..RetryPolicy::default()
            },
            ..GatewayConfig::default()
        };
        let view = ViewConfig::load(&config).unwrap().load_view().unwrap();
        let recorder = Arc::new(RecordingGateway::new(HttpGateway::with_credential(gw, "k").unwrap()));
        let live = Predictor::new(recorder.clone()).predict(&view, DateTime::UNIX_EPOCH).await;
        let replay = Predictor::new(Arc::new(MockGateway::new(recorder.fixtures())))
            .predict(&view, DateTime::UNIX_EPOCH)
            .await;
        server.abort();
        matches!((&live, &replay), (Ok(a), Ok(b)) if a == b)
    });
    check(identical, "live and replayed reports differ")?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("exit 0, 7 issues, byte-identical reruns, replay identical, {} ms", elapsed.as_millis()))
}

fn service_parity(rt: &tokio::runtime::Runtime) -> Outcome {
    rt.block_on(async {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let bundle = DatasetBundle::bundled();
        let n = bundle.assessments.issue_ids().len() as u32;
        let issues = (1..=n)
            .map(|i| uxprobe_core::PredictedIssue {
                ordinal: i,
                title: None,
                description: format!("issue {i}"),
                raw_text: format!("{i}. issue {i}"),
            })
            .collect();
        let report = uxprobe_core::IssueReport::new("C", "mock", DateTime::UNIX_EPOCH, issues);
        let client = reqwest::Client::new();

        let svc = common::start_service(dir.path(), common::mock_predictor()).await;
        let created: Value = client
            .post(svc.url("/api/sessions"))
            .json(&report)
            .send()
            .await
            .map_err(|e| e.to_string())?
            .json()
            .await
            .map_err(|e| e.to_string())?;
        let id = created["session_id"].as_str().ok_or("no session id")?.to_string();

        let mut renamed = AssessmentTable::new();
        for e in bundle.assessments.entries() {
            let ordinal: u32 = e.issue_id.trim_start_matches('C').parse().map_err(|_| "bad id")?;
            let status = client
                .put(svc.url(&format!("/api/sessions/{id}/labels/{ordinal}")))
                .json(&json!({ "rater_id": e.rater_id, "label": e.label.code() }))
                .send()
                .await
                .map_err(|e| e.to_string())?
                .status();
            check(status.is_success(), format!("label write returned {status}"))?;
            renamed
                .insert(report.issue_id(ordinal), e.rater_id.clone(), e.label)
                .map_err(|e| e.to_string())?;
        }
        svc.stop();

        // Restart over the same state directory before reading anything back.
        let svc = common::start_service(dir.path(), common::mock_predictor()).await;
        let served: Value = client
            .get(svc.url(&format!("/api/sessions/{id}/metrics")))
            .send()
            .await
            .map_err(|e| e.to_string())?
            .json()
            .await
            .map_err(|e| e.to_string())?;
        let session: Value = client
            .get(svc.url(&format!("/api/sessions/{id}")))
            .send()
            .await
            .map_err(|e| e.to_string())?
            .json()
            .await
            .map_err(|e| e.to_string())?;
        svc.stop();
        let kept = session["labels"].as_array().map_or(0, Vec::len);
        check(kept == 98, format!("{kept} of 98 labels after restart"))?;

        let csv = dir.path().join("assessments.csv");
        std::fs::write(&csv, render_assessments_csv(&renamed)).map_err(|e| e.to_string())?;
        let cli = run_evaluate(&EvaluateOptions {
            data: DataSource::Files {
                assessments: Some(csv),
                rosters: None,
                matches: None,
            },
            kappa: KappaSelection::All,
            rule: ValidityRule::AtLeastOneA,
            format: ReportFormat::Json,
        })
        .map_err(|e| e.to_string())?;
        let cli: Value = serde_json::from_str(&cli).map_err(|e| e.to_string())?;
        check(served == cli, "service metrics differ from evaluate")?;

        let direct = compute_metrics(&renamed, None, &MetricsOptions::default()).map_err(|e| e.to_string())?;
        let precision = direct.rater("E1").and_then(|r| r.precision.proportion());
        check(precision == Proportion::new(27, 44), format!("E1 precision {precision:?}"))?;
        Ok("98 labels replayed, kept across restart, metrics equal evaluate".to_string())
    })
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("runtime");
    let criteria: Vec<Criterion> = vec![
        ("confusion counts", Box::new(confusion_counts)),
        ("precision and recall", Box::new(precision_recall)),
        ("kappa", Box::new(kappa)),
        ("overlap regions", Box::new(overlap)),
        ("prompt goldens", Box::new(prompts)),
        ("parser round trip", Box::new(parser_round_trip)),
        ("mock end to end", Box::new(|| mock_end_to_end(&rt))),
        ("service parity", Box::new(|| service_parity(&rt))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
