#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use uxprobe::service::{router, AppState, SessionStore};
use uxprobe_core::gateway::MockGateway;
use uxprobe_core::pipeline::Predictor;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/category_view")
}

pub fn view_config() -> PathBuf {
    fixture_dir().join("view.toml")
}

pub fn mock_fixtures() -> PathBuf {
    fixture_dir().join("mock_responses.json")
}

pub fn mock_predictor() -> Predictor {
    Predictor::new(Arc::new(MockGateway::from_file(mock_fixtures()).unwrap()))
}

pub struct Running {
    pub base: String,
    handle: tokio::task::JoinHandle<()>,
}

impl Running {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn stop(self) {
        self.handle.abort();
    }
}

/// Starts the service on an ephemeral port over `state_dir`.
pub async fn start_service(state_dir: &Path, predictor: Predictor) -> Running {
    let state = Arc::new(AppState {
        store: SessionStore::open(state_dir).unwrap(),
        predictor: Ok(predictor),
    });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state, None);
    let handle = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    Running {
        base: format!("http://{addr}"),
        handle,
    }
}
