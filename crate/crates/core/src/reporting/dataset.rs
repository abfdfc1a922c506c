use std::path::Path;

use crate::model::{AssessmentTable, MatchGroup, MethodTag, Rosters};

use super::loaders::{parse_assessments, parse_match_table, parse_rosters, LoadError};

/// Reference study data compiled into the crate.
pub const BUNDLED_ROSTERS_CSV: &str = include_str!("../../data/rosters.csv");
pub const BUNDLED_ASSESSMENTS_CSV: &str = include_str!("../../data/assessments.csv");
pub const BUNDLED_MATCHES_CSV: &str = include_str!("../../data/matches.csv");

/// File names used by [`DatasetBundle::export`].
pub const ROSTERS_FILE: &str = "rosters.csv";
pub const ASSESSMENTS_FILE: &str = "assessments.csv";
pub const MATCHES_FILE: &str = "matches.csv";

/// Rosters of the three methods, the raters' assessments of the tool issues and the
/// cross-method match groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub rosters: Rosters,
    pub assessments: AssessmentTable,
    pub match_groups: Vec<MatchGroup>,
}

impl DatasetBundle {
    /// The two-app reference study shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_ROSTERS_CSV, BUNDLED_ASSESSMENTS_CSV, BUNDLED_MATCHES_CSV)
            .expect("bundled data set is consistent")
    }

    pub fn parse(rosters: &str, assessments: &str, matches: &str) -> Result<Self, LoadError> {
        let rosters = parse_rosters(rosters)?;
        let assessments = parse_assessments(assessments)?;
        let match_groups = parse_match_table(matches, Some(&rosters))?;
        let bundle = Self {
            rosters,
            assessments,
            match_groups,
        };
        bundle.check_cross_references()?;
        Ok(bundle)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, LoadError> {
        let dir = dir.as_ref();
        let rosters = super::load_rosters(dir.join(ROSTERS_FILE))?;
        let assessments = super::load_assessments(dir.join(ASSESSMENTS_FILE))?;
        let match_groups = super::load_match_table(dir.join(MATCHES_FILE), Some(&rosters))?;
        let bundle = Self {
            rosters,
            assessments,
            match_groups,
        };
        bundle.check_cross_references()?;
        Ok(bundle)
    }

    /// Every assessed id must be a tool issue in the rosters.
    pub fn check_cross_references(&self) -> Result<(), LoadError> {
        let stray: Vec<&str> = self
            .assessments
            .issue_ids()
            .into_iter()
            .filter(|id| self.rosters.method_of(id) != Some(MethodTag::ToolPrediction))
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(LoadError::CrossReference(format!(
                "assessed ids missing from the tool roster: {}",
                stray.join(", ")
            )))
        }
    }

    /// Writes the bundled CSV files, comments included, into `dir`.
    pub fn export_bundled(dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(ROSTERS_FILE), BUNDLED_ROSTERS_CSV)?;
        std::fs::write(dir.join(ASSESSMENTS_FILE), BUNDLED_ASSESSMENTS_CSV)?;
        std::fs::write(dir.join(MATCHES_FILE), BUNDLED_MATCHES_CSV)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sizes() {
        let b = DatasetBundle::bundled();
        assert_eq!(b.rosters.ids(MethodTag::UsabilityTesting).len(), 27);
        assert_eq!(b.rosters.ids(MethodTag::ExpertReview).len(), 58);
        assert_eq!(b.rosters.ids(MethodTag::ToolPrediction).len(), 49);
        assert_eq!(b.assessments.len(), 98);
        assert_eq!(b.match_groups.len(), 26);
    }

    #[test]
    fn export_then_load() {
        let dir = tempfile::tempdir().unwrap();
        DatasetBundle::export_bundled(dir.path()).unwrap();
        assert_eq!(DatasetBundle::load(dir.path()).unwrap(), DatasetBundle::bundled());
    }

    #[test]
    fn stray_assessment_is_rejected() {
        let assessments = format!("{BUNDLED_ASSESSMENTS_CSV}A1,E1,A\n");
        let err = DatasetBundle::parse(BUNDLED_ROSTERS_CSV, &assessments, BUNDLED_MATCHES_CSV)
            .unwrap_err();
        assert!(err.to_string().contains("A1"));
    }
}
