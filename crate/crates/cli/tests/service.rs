//! The HTTP API over a mock-backed predictor.

mod common;

use chrono::DateTime;
use reqwest::multipart::{Form, Part};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use uxprobe::commands::{run_evaluate, DataSource, EvaluateOptions, KappaSelection};
use uxprobe_core::reporting::{render_assessments_csv, DatasetBundle, ReportFormat};
use uxprobe_core::{AssessmentTable, IssueReport, PredictedIssue, ValidityRule};

fn report(view_id: &str, n: u32) -> IssueReport {
    let issues = (1..=n)
        .map(|i| PredictedIssue {
            ordinal: i,
            title: Some(format!("Issue {i}")),
            description: format!("text of issue {i}"),
            raw_text: format!("{i}. Issue {i}: text of issue {i}"),
        })
        .collect();
    IssueReport::new(view_id, "mock", DateTime::UNIX_EPOCH, issues)
}

async fn create(client: &Client, base: &common::Running, report: &IssueReport) -> String {
    let r = client
        .post(base.url("/api/sessions"))
        .json(report)
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    r.json::<Value>().await.unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string()
}

async fn label(
    client: &Client,
    svc: &common::Running,
    id: &str,
    ordinal: u32,
    rater: &str,
    label: &str,
    overwrite: bool,
) -> reqwest::Response {
    client
        .put(svc.url(&format!("/api/sessions/{id}/labels/{ordinal}?overwrite={overwrite}")))
        .json(&json!({ "rater_id": rater, "label": label }))
        .send()
        .await
        .unwrap()
}

#[tokio::test]
async fn two_of_three_precision() {
    let dir = tempfile::tempdir().unwrap();
    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let client = Client::new();
    let id = create(&client, &svc, &report("v", 3)).await;

    for (ordinal, l) in [(1, "A"), (2, "A"), (3, "B")] {
        let r = label(&client, &svc, &id, ordinal, "R", l, false).await;
        assert_eq!(r.status(), StatusCode::OK);
        let entry: Value = r.json().await.unwrap();
        assert_eq!(entry["issue_id"], format!("v-{ordinal}"));
    }
    let m: Value = client
        .get(svc.url(&format!("/api/sessions/{id}/metrics")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let precision = &m["raters"][0]["precision"]["value"];
    assert_eq!(precision["numerator"], 2);
    assert_eq!(precision["denominator"], 3);
    assert!(m["kappa_unavailable"].as_str().unwrap().contains("two raters"));
    svc.stop();
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let client = Client::new();

    let r = client.get(svc.url("/api/sessions/nope")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    assert_eq!(r.json::<Value>().await.unwrap()["class"], "not_found");

    let id = create(&client, &svc, &report("v", 2)).await;
    assert_eq!(label(&client, &svc, &id, 9, "R", "A", false).await.status(), StatusCode::NOT_FOUND);
    assert_eq!(label(&client, &svc, &id, 1, "R", "E", false).await.status(), StatusCode::BAD_REQUEST);
    assert_eq!(label(&client, &svc, &id, 1, " ", "A", false).await.status(), StatusCode::BAD_REQUEST);

    assert_eq!(label(&client, &svc, &id, 1, "R", "A", false).await.status(), StatusCode::OK);
    assert_eq!(label(&client, &svc, &id, 1, "R", "A", false).await.status(), StatusCode::OK);
    let conflict = label(&client, &svc, &id, 1, "R", "C", false).await;
    assert_eq!(conflict.status(), StatusCode::CONFLICT);
    assert_eq!(conflict.json::<Value>().await.unwrap()["current"]["label"], "A");
    assert_eq!(label(&client, &svc, &id, 1, "R", "C", true).await.status(), StatusCode::OK);

    let mut broken = report("v", 2);
    broken.issues[1].ordinal = 5;
    let r = client.post(svc.url("/api/sessions")).json(&broken).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    let r = client
        .post(svc.url("/api/sessions"))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);

    let page = client.get(svc.url("/")).send().await.unwrap();
    assert_eq!(page.status(), StatusCode::OK);
    svc.stop();
}

#[tokio::test]
async fn labels_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new();
    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let id = create(&client, &svc, &report("v", 4)).await;
    for (o, l) in [(1, "A"), (2, "B"), (3, "C"), (4, "D")] {
        label(&client, &svc, &id, o, "E1", l, false).await;
    }
    let before: Value = client
        .get(svc.url(&format!("/api/sessions/{id}")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    svc.stop();

    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let after: Value = client
        .get(svc.url(&format!("/api/sessions/{id}")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(before, after);
    assert_eq!(after["labels"].as_array().unwrap().len(), 4);
    let list: Value = client.get(svc.url("/api/sessions")).send().await.unwrap().json().await.unwrap();
    assert_eq!(list["sessions"], json!([id]));
    svc.stop();
}

/// Replays the bundled assessment table through the label endpoint and checks the
/// endpoint's metrics against `evaluate` on the same labels written as CSV.
#[tokio::test]
async fn replayed_assessments_match_the_cli() {
    let bundle = DatasetBundle::bundled();
    let n = bundle.assessments.issue_ids().len() as u32;
    let dir = tempfile::tempdir().unwrap();
    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let client = Client::new();
    let session_report = report("C", n);
    let id = create(&client, &svc, &session_report).await;

    let mut renamed = AssessmentTable::new();
    for e in bundle.assessments.entries() {
        let ordinal: u32 = e.issue_id.trim_start_matches('C').parse().unwrap();
        let r = label(&client, &svc, &id, ordinal, &e.rater_id, e.label.code(), false).await;
        assert_eq!(r.status(), StatusCode::OK);
        renamed
            .insert(session_report.issue_id(ordinal), e.rater_id.clone(), e.label)
            .unwrap();
    }
    let served: Value = client
        .get(svc.url(&format!("/api/sessions/{id}/metrics")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();

    let csv = dir.path().join("assessments.csv");
    std::fs::write(&csv, render_assessments_csv(&renamed)).unwrap();
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
    .unwrap();
    let cli: Value = serde_json::from_str(&cli).unwrap();
    assert_eq!(served, cli);
    assert_eq!(served["raters"][0]["counts"]["count_a"], 27);
    svc.stop();
}

fn predict_form(user_task: Option<&str>) -> Form {
    let dir = common::fixture_dir();
    let mut form = Form::new()
        .text("view_id", "quiz-category-view")
        .text(
            "app_overview",
            "a quiz app where users pick a category, configure a round and answer multiple-choice questions",
        )
        .part(
            "source",
            Part::text(std::fs::read_to_string(dir.join("CategoryView.swift")).unwrap())
                .file_name("CategoryView.swift"),
        )
        .part(
            "screenshot",
            Part::bytes(std::fs::read(dir.join("screenshot.png")).unwrap()).file_name("screenshot.png"),
        );
    if let Some(t) = user_task {
        form = form.text("user_task", t.to_string());
    }
    form
}

#[tokio::test]
async fn predict_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let svc = common::start_service(dir.path(), common::mock_predictor()).await;
    let client = Client::new();

    let r = client
        .post(svc.url("/api/predict"))
        .multipart(predict_form(Some("choosing a quiz category to start a new round")))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let report: IssueReport = r.json().await.unwrap();
    assert_eq!(report.issues.len(), 7);
    assert_eq!(report.view_id, "quiz-category-view");

    let r = client
        .post(svc.url("/api/predict"))
        .multipart(predict_form(None))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    let body: Value = r.json().await.unwrap();
    assert_eq!(body["class"], "input");
    assert_eq!(body["violations"][0]["field"], "user_task");

    let r = client
        .post(svc.url("/api/predict"))
        .multipart(predict_form(Some("something the fixtures never saw")))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_GATEWAY);
    assert_eq!(r.json::<Value>().await.unwrap()["class"], "missing_fixture");
    svc.stop();
}
