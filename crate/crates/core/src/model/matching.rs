//! Cross-method issue matching and the overlap between evaluation methods.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The method through which an issue record was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    UsabilityTesting,
    ExpertReview,
    ToolPrediction,
}

impl MethodTag {
    pub const ALL: [MethodTag; 3] = [
        MethodTag::UsabilityTesting,
        MethodTag::ExpertReview,
        MethodTag::ToolPrediction,
    ];

    /// Short name used in data files.
    pub fn short_name(self) -> &'static str {
        match self {
            MethodTag::UsabilityTesting => "testing",
            MethodTag::ExpertReview => "expert",
            MethodTag::ToolPrediction => "tool",
        }
    }

    fn bit(self) -> u8 {
        match self {
            MethodTag::UsabilityTesting => 0b001,
            MethodTag::ExpertReview => 0b010,
            MethodTag::ToolPrediction => 0b100,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method '{0}' (expected testing, expert or tool)")]
pub struct UnknownMethod(pub String);

impl FromStr for MethodTag {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "testing" | "usability_testing" => Ok(MethodTag::UsabilityTesting),
            "expert" | "expert_review" => Ok(MethodTag::ExpertReview),
            "tool" | "tool_prediction" => Ok(MethodTag::ToolPrediction),
            _ => Err(UnknownMethod(s.to_string())),
        }
    }
}

/// A non-empty subset of the three methods; one Venn region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodSet(u8);

impl MethodSet {
    pub const EMPTY: MethodSet = MethodSet(0);

    /// The seven non-empty regions: three exclusive, three pairwise-only, the triple.
    pub const REGIONS: [MethodSet; 7] = [
        MethodSet(0b001),
        MethodSet(0b010),
        MethodSet(0b100),
        MethodSet(0b011),
        MethodSet(0b101),
        MethodSet(0b110),
        MethodSet(0b111),
    ];

    pub fn of(methods: &[MethodTag]) -> Self {
        MethodSet(methods.iter().fold(0, |acc, m| acc | m.bit()))
    }

    pub fn with(self, method: MethodTag) -> Self {
        MethodSet(self.0 | method.bit())
    }

    pub fn contains(self, method: MethodTag) -> bool {
        self.0 & method.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn methods(self) -> Vec<MethodTag> {
        MethodTag::ALL
            .into_iter()
            .filter(|m| self.contains(*m))
            .collect()
    }
}

impl fmt::Display for MethodSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.methods().iter().map(|m| m.short_name()).collect();
        f.write_str(&names.join("+"))
    }
}

impl Serialize for MethodSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.methods().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MethodSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let methods = Vec::<MethodTag>::deserialize(deserializer)?;
        Ok(MethodSet::of(&methods))
    }
}

/// One issue record from a method's roster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: String,
    pub method: MethodTag,
    pub app: String,
    pub view: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("issue id '{0}' appears more than once in the rosters")]
pub struct DuplicateRosterId(pub String);

/// Full issue lists of all methods. Ids are unique across methods.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Rosters {
    entries: Vec<RosterEntry>,
    index: BTreeMap<String, usize>,
}

impl Rosters {
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self, DuplicateRosterId> {
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(DuplicateRosterId(e.id.clone()));
            }
        }
        Ok(Self { entries, index })
    }

    /// Rosters with bare ids and no texts.
    pub fn from_ids(by_method: &[(MethodTag, Vec<String>)]) -> Result<Self, DuplicateRosterId> {
        let entries = by_method
            .iter()
            .flat_map(|(method, ids)| {
                ids.iter().map(move |id| RosterEntry {
                    id: id.clone(),
                    method: *method,
                    app: String::new(),
                    view: String::new(),
                    text: String::new(),
                })
            })
            .collect();
        Self::new(entries)
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&RosterEntry> {
        self.index.get(id).map(|&i| &self.entries[i])
    }

    pub fn method_of(&self, id: &str) -> Option<MethodTag> {
        self.get(id).map(|e| e.method)
    }

    /// Ids of one method in roster order.
    pub fn ids(&self, method: MethodTag) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.method == method)
            .map(|e| e.id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchGroupError {
    #[error("a match group needs ids from at least two methods, found {0}")]
    TooFewMethods(usize),
    #[error("issue id '{0}' listed twice in one group")]
    RepeatedId(String),
}

/// Records that issues from different methods describe the same problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchGroup {
    pub view_name: String,
    pub ids_by_method: BTreeMap<MethodTag, Vec<String>>,
}

impl MatchGroup {
    pub fn new(
        view_name: impl Into<String>,
        testing: &[&str],
        expert: &[&str],
        tool: &[&str],
    ) -> Result<Self, MatchGroupError> {
        let mut ids_by_method = BTreeMap::new();
        for (method, ids) in MethodTag::ALL.into_iter().zip([testing, expert, tool]) {
            ids_by_method.insert(method, ids.iter().map(|s| s.to_string()).collect());
        }
        let group = Self {
            view_name: view_name.into(),
            ids_by_method,
        };
        group.validate()?;
        Ok(group)
    }

    pub fn ids(&self, method: MethodTag) -> &[String] {
        self.ids_by_method
            .get(&method)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn methods(&self) -> MethodSet {
        MethodTag::ALL
            .into_iter()
            .filter(|m| !self.ids(*m).is_empty())
            .fold(MethodSet::EMPTY, MethodSet::with)
    }

    pub fn all_ids(&self) -> impl Iterator<Item = (MethodTag, &str)> {
        MethodTag::ALL
            .into_iter()
            .flat_map(move |m| self.ids(m).iter().map(move |id| (m, id.as_str())))
    }

    pub fn validate(&self) -> Result<(), MatchGroupError> {
        let populated = self.methods().len();
        if populated < 2 {
            return Err(MatchGroupError::TooFewMethods(populated));
        }
        let mut seen = BTreeSet::new();
        for (_, id) in self.all_ids() {
            if !seen.insert(id) {
                return Err(MatchGroupError::RepeatedId(id.to_string()));
            }
        }
        Ok(())
    }
}

/// One deduplicated problem: either a match group or an unmatched roster record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctIssue {
    /// Member records as (method, id).
    pub members: Vec<(MethodTag, String)>,
    pub methods: MethodSet,
    /// Index into [`IssueUniverse::groups`] when this issue came from a group.
    pub group: Option<usize>,
}

/// Deduplicated cross-method issue set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueUniverse {
    /// Roster ids per method after tool-validity filtering.
    pub rosters: BTreeMap<MethodTag, Vec<String>>,
    pub groups: Vec<MatchGroup>,
    pub distinct_issues: Vec<DistinctIssue>,
}

/// Count for one Venn region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCount {
    pub methods: MethodSet,
    pub count: usize,
}

/// Distinct-issue counts for the seven disjoint membership patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapSummary {
    pub per_method_total: BTreeMap<MethodTag, usize>,
    /// Always all seven regions, in [`MethodSet::REGIONS`] order.
    pub regions: Vec<RegionCount>,
    pub union_total: usize,
}

impl OverlapSummary {
    pub fn region(&self, set: MethodSet) -> usize {
        self.regions
            .iter()
            .find(|r| r.methods == set)
            .map_or(0, |r| r.count)
    }

    pub fn exclusive(&self, method: MethodTag) -> usize {
        self.region(MethodSet::of(&[method]))
    }

    pub fn pairwise_only(&self, a: MethodTag, b: MethodTag) -> usize {
        self.region(MethodSet::of(&[a, b]))
    }

    pub fn triple(&self) -> usize {
        self.region(MethodSet::of(&MethodTag::ALL))
    }

    pub fn total(&self, method: MethodTag) -> usize {
        self.per_method_total.get(&method).copied().unwrap_or(0)
    }

    /// Reconciles per-method totals and the union against the region counts.
    pub fn check_sums(&self) -> Result<(), String> {
        for method in MethodTag::ALL {
            let from_regions: usize = self
                .regions
                .iter()
                .filter(|r| r.methods.contains(method))
                .map(|r| r.count)
                .sum();
            if from_regions != self.total(method) {
                return Err(format!(
                    "{method}: regions sum to {from_regions}, total is {}",
                    self.total(method)
                ));
            }
        }
        let sum: usize = self.regions.iter().map(|r| r.count).sum();
        if sum != self.union_total {
            return Err(format!("regions sum to {sum}, union is {}", self.union_total));
        }
        Ok(())
    }
}
