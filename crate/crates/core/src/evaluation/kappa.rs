use crate::model::{AssessmentLabel, AssessmentTable, Kappa, KappaMode};

use super::EvaluationError;

/// Unweighted Cohen's kappa between two raters over the issues both labelled.
///
/// Both raters must have labelled exactly the same issue ids. In `BinaryValid` mode the
/// labels collapse to `A` versus the rest; in `ExcludeUncertain` mode items either rater
/// marked `C` are dropped first. When chance agreement is 1 the returned value is `None`.
pub fn cohens_kappa(
    table: &AssessmentTable,
    rater_x: &str,
    rater_y: &str,
    mode: KappaMode,
) -> Result<Kappa, EvaluationError> {
    let xs = table
        .labels_of(rater_x)
        .ok_or_else(|| EvaluationError::UnknownRater(rater_x.to_string()))?;
    let ys = table
        .labels_of(rater_y)
        .ok_or_else(|| EvaluationError::UnknownRater(rater_y.to_string()))?;

    let only_x: Vec<String> = xs.keys().filter(|k| !ys.contains_key(*k)).cloned().collect();
    let only_y: Vec<String> = ys.keys().filter(|k| !xs.contains_key(*k)).cloned().collect();
    if !only_x.is_empty() || !only_y.is_empty() {
        return Err(EvaluationError::MismatchedItemSets {
            rater_x: rater_x.to_string(),
            rater_y: rater_y.to_string(),
            only_x,
            only_y,
        });
    }

    let pairs: Vec<(usize, usize)> = xs
        .iter()
        .map(|(id, &x)| (x, ys[id]))
        .filter(|&(x, y)| {
            mode != KappaMode::ExcludeUncertain
                || (x != AssessmentLabel::C && y != AssessmentLabel::C)
        })
        .map(|(x, y)| (category(x, mode), category(y, mode)))
        .collect();

    let n = pairs.len() as u64;
    if n == 0 {
        return Err(EvaluationError::EmptyItemSet {
            rater_x: rater_x.to_string(),
            rater_y: rater_y.to_string(),
            mode,
        });
    }
    let mut margin_x = [0u64; 4];
    let mut margin_y = [0u64; 4];
    let mut agree = 0u64;
    for &(x, y) in &pairs {
        margin_x[x] += 1;
        margin_y[y] += 1;
        agree += u64::from(x == y);
    }
    let chance: u64 = margin_x.iter().zip(&margin_y).map(|(a, b)| a * b).sum();
    let n_sq = n * n;

    let value = (chance != n_sq)
        .then(|| (n * agree) as f64 - chance as f64)
        .map(|num| num / (n_sq - chance) as f64);

    Ok(Kappa {
        rater_x: rater_x.to_string(),
        rater_y: rater_y.to_string(),
        mode,
        items: pairs.len(),
        observed_agreement: agree as f64 / n as f64,
        chance_agreement: chance as f64 / n_sq as f64,
        value,
    })
}

fn category(label: AssessmentLabel, mode: KappaMode) -> usize {
    match (mode, label) {
        (KappaMode::BinaryValid, AssessmentLabel::A) => 0,
        (KappaMode::BinaryValid, _) => 1,
        (_, AssessmentLabel::A) => 0,
        (_, AssessmentLabel::B) => 1,
        (_, AssessmentLabel::C) => 2,
        (_, AssessmentLabel::D) => 3,
    }
}
