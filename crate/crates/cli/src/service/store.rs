//! Triage sessions kept as one JSON file each under `<state_dir>/sessions`.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tracing::{info, warn};
use uxprobe_core::{AssessmentLabel, AssessmentTable, IssueReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub ordinal: u32,
    pub issue_id: String,
    pub rater_id: String,
    pub label: AssessmentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub report: IssueReport,
    /// Sorted by ordinal, then rater.
    pub labels: Vec<LabelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelOutcome {
    Written(LabelEntry),
    /// A different label is already stored and overwriting was not requested.
    Conflict(LabelEntry),
    UnknownOrdinal,
}

impl Session {
    pub fn new(session_id: String, report: IssueReport, created_at: DateTime<Utc>) -> Self {
        Self {
            session_id,
            created_at,
            report,
            labels: Vec::new(),
        }
    }

    /// Writing the label already stored is a no-op success, not a conflict.
    pub fn set_label(
        &mut self,
        ordinal: u32,
        rater_id: &str,
        label: AssessmentLabel,
        overwrite: bool,
    ) -> LabelOutcome {
        if !self.report.issues.iter().any(|i| i.ordinal == ordinal) {
            return LabelOutcome::UnknownOrdinal;
        }
        let entry = LabelEntry {
            ordinal,
            issue_id: self.report.issue_id(ordinal),
            rater_id: rater_id.to_string(),
            label,
        };
        let key = |e: &LabelEntry| (e.ordinal, e.rater_id.clone());
        match self.labels.binary_search_by_key(&key(&entry), key) {
            Ok(i) if self.labels[i].label == label => LabelOutcome::Written(entry),
            Ok(i) if !overwrite => LabelOutcome::Conflict(self.labels[i].clone()),
            Ok(i) => {
                self.labels[i] = entry.clone();
                LabelOutcome::Written(entry)
            }
            Err(i) => {
                self.labels.insert(i, entry.clone());
                LabelOutcome::Written(entry)
            }
        }
    }

    /// The labels as an assessment table keyed by `<view_id>-<ordinal>`.
    pub fn assessment_table(&self) -> AssessmentTable {
        let mut table = AssessmentTable::new();
        for e in &self.labels {
            table
                .insert(e.issue_id.clone(), e.rater_id.clone(), e.label)
                .expect("one label per issue and rater");
        }
        table
    }
}

pub type SharedSession = Arc<Mutex<Session>>;

pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, SharedSession>>,
}

impl SessionStore {
    /// Creates the directory if needed and loads every stored session.
    pub fn open(state_dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = state_dir.as_ref().join("sessions");
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            match serde_json::from_str::<Session>(&text) {
                Ok(s) => {
                    sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
                }
                Err(e) => warn!(path = %path.display(), error = %e, "skipping unreadable session"),
            }
        }
        info!(count = sessions.len(), dir = %dir.display(), "loaded sessions");
        Ok(Self {
            dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn get(&self, id: &str) -> Option<SharedSession> {
        self.sessions.read().expect("session map lock").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .expect("session map lock")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    /// Persists a new session before making it visible.
    pub async fn create(&self, report: IssueReport) -> std::io::Result<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(id.clone(), report, Utc::now());
        self.persist(&session).await?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    /// Write to a temporary file, fsync, rename over the old file, fsync the directory.
    pub async fn persist(&self, session: &Session) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(session).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        let dir = self.dir.clone();
        let id = session.session_id.clone();
        tokio::task::spawn_blocking(move || {
            let tmp = dir.join(format!("{id}.json.tmp"));
            let dst = dir.join(format!("{id}.json"));
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            std::fs::rename(&tmp, &dst)?;
            #[cfg(unix)]
            std::fs::File::open(&dir)?.sync_all()?;
            Ok(())
        })
        .await
        .map_err(std::io::Error::other)?
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use uxprobe_core::PredictedIssue;
    use AssessmentLabel::*;

    fn report(n: u32) -> IssueReport {
        let issues = (1..=n)
            .map(|i| PredictedIssue {
                ordinal: i,
                title: None,
                description: format!("issue {i}"),
                raw_text: format!("{i}. issue {i}"),
            })
            .collect();
        IssueReport::new("v", "m", DateTime::UNIX_EPOCH, issues)
    }

    #[test]
    fn conflicts_and_overwrites() {
        let mut s = Session::new("s".into(), report(2), DateTime::UNIX_EPOCH);
        assert!(matches!(s.set_label(1, "R", A, false), LabelOutcome::Written(_)));
        assert!(matches!(s.set_label(1, "R", A, false), LabelOutcome::Written(_)));
        assert!(matches!(s.set_label(1, "R", B, false), LabelOutcome::Conflict(e) if e.label == A));
        assert!(matches!(s.set_label(1, "R", B, true), LabelOutcome::Written(_)));
        assert_eq!(s.set_label(3, "R", A, false), LabelOutcome::UnknownOrdinal);
        s.set_label(2, "Q", C, false);
        assert_eq!(s.labels.len(), 2);
        let t = s.assessment_table();
        assert_eq!(t.get("v-1", "R"), Some(B));
        assert_eq!(t.get("v-2", "Q"), Some(C));
    }

    #[tokio::test]
    async fn sessions_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let created = store.create(report(3)).await.unwrap();
        {
            let shared = store.get(&created.session_id).unwrap();
            let mut s = shared.lock().await;
            s.set_label(2, "R", D, false);
            store.persist(&s).await.unwrap();
        }
        let reopened = SessionStore::open(dir.path()).unwrap();
        let s = reopened.get(&created.session_id).unwrap();
        let s = s.lock().await;
        assert_eq!(s.labels.len(), 1);
        assert_eq!(s.report, created.report);
        assert_eq!(reopened.ids(), std::slice::from_ref(&created.session_id));
    }
}
