use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    DistinctIssue, IssueUniverse, MatchGroup, MethodSet, MethodTag, OverlapSummary, RegionCount,
    Rosters,
};

use super::EvaluationError;

/// Deduplicates the three rosters into distinct problems.
///
/// Tool ids not in `valid_tool_ids` are removed from the tool roster and from every group
/// before anything else. Each group then becomes one distinct issue whose method set is
/// the methods it still has ids for; each roster id outside all groups becomes its own
/// issue.
pub fn build_universe(
    rosters: &Rosters,
    groups: &[MatchGroup],
    valid_tool_ids: &BTreeSet<String>,
) -> Result<IssueUniverse, EvaluationError> {
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    for (index, group) in groups.iter().enumerate() {
        group
            .validate()
            .map_err(|source| EvaluationError::InvalidGroup { group: index, source })?;
        for (method, id) in group.all_ids() {
            match rosters.method_of(id) {
                None => {
                    return Err(EvaluationError::UnknownIdInGroup {
                        id: id.to_string(),
                        group: index,
                    })
                }
                Some(actual) if actual != method => {
                    return Err(EvaluationError::MethodMismatch {
                        id: id.to_string(),
                        group: index,
                        listed: method,
                        actual,
                    })
                }
                Some(_) => {}
            }
            if let Some(first) = owner.insert(id, index) {
                return Err(EvaluationError::DuplicateIdAcrossGroups {
                    id: id.to_string(),
                    first_group: first,
                    second_group: index,
                });
            }
        }
    }

    let keep = |method: MethodTag, id: &str| {
        method != MethodTag::ToolPrediction || valid_tool_ids.contains(id)
    };

    let filtered_rosters: BTreeMap<MethodTag, Vec<String>> = MethodTag::ALL
        .into_iter()
        .map(|m| {
            let ids = rosters
                .ids(m)
                .into_iter()
                .filter(|id| keep(m, id))
                .map(str::to_string)
                .collect();
            (m, ids)
        })
        .collect();

    let filtered_groups: Vec<MatchGroup> = groups
        .iter()
        .map(|g| MatchGroup {
            view_name: g.view_name.clone(),
            ids_by_method: MethodTag::ALL
                .into_iter()
                .map(|m| {
                    let ids = g.ids(m).iter().filter(|id| keep(m, id)).cloned().collect();
                    (m, ids)
                })
                .collect(),
        })
        .collect();

    let mut distinct_issues: Vec<DistinctIssue> = filtered_groups
        .iter()
        .enumerate()
        .map(|(index, g)| DistinctIssue {
            members: g.all_ids().map(|(m, id)| (m, id.to_string())).collect(),
            methods: g.methods(),
            group: Some(index),
        })
        .collect();

    for (method, ids) in &filtered_rosters {
        for id in ids {
            if !owner.contains_key(id.as_str()) {
                distinct_issues.push(DistinctIssue {
                    members: vec![(*method, id.clone())],
                    methods: MethodSet::of(&[*method]),
                    group: None,
                });
            }
        }
    }

    Ok(IssueUniverse {
        rosters: filtered_rosters,
        groups: filtered_groups,
        distinct_issues,
    })
}

/// Testing and expert-review records belonging to a distinct issue the tool did not find.
pub fn false_negative_count(universe: &IssueUniverse) -> u64 {
    universe
        .distinct_issues
        .iter()
        .filter(|d| !d.methods.contains(MethodTag::ToolPrediction))
        .map(|d| d.members.len() as u64)
        .sum()
}

/// Distinct issues found by testing or expert review but not by the tool.
pub fn distinct_false_negative_count(universe: &IssueUniverse) -> u64 {
    universe
        .distinct_issues
        .iter()
        .filter(|d| !d.methods.contains(MethodTag::ToolPrediction) && !d.methods.is_empty())
        .count() as u64
}

pub fn overlap_summary(universe: &IssueUniverse) -> OverlapSummary {
    let regions: Vec<RegionCount> = MethodSet::REGIONS
        .into_iter()
        .map(|set| RegionCount {
            methods: set,
            count: universe
                .distinct_issues
                .iter()
                .filter(|d| d.methods == set)
                .count(),
        })
        .collect();
    let per_method_total = MethodTag::ALL
        .into_iter()
        .map(|m| {
            let total = regions
                .iter()
                .filter(|r| r.methods.contains(m))
                .map(|r| r.count)
                .sum();
            (m, total)
        })
        .collect();
    let union_total = regions.iter().map(|r| r.count).sum();
    OverlapSummary {
        per_method_total,
        regions,
        union_total,
    }
}
