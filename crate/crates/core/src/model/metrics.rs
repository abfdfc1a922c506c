use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::assessment::AssessmentLabel;
use super::matching::OverlapSummary;

/// Version of the metrics-report JSON layout.
pub const METRICS_REPORT_SCHEMA_VERSION: u32 = 1;

/// How many tool issues one rater put in each category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub rater_id: String,
    pub count_a: u64,
    pub count_b: u64,
    pub count_c: u64,
    pub count_d: u64,
}

impl ConfusionCounts {
    pub fn zero(rater_id: impl Into<String>) -> Self {
        Self {
            rater_id: rater_id.into(),
            count_a: 0,
            count_b: 0,
            count_c: 0,
            count_d: 0,
        }
    }

    pub fn new(rater_id: impl Into<String>, a: u64, b: u64, c: u64, d: u64) -> Self {
        Self {
            rater_id: rater_id.into(),
            count_a: a,
            count_b: b,
            count_c: c,
            count_d: d,
        }
    }

    pub fn add(&mut self, label: AssessmentLabel) {
        match label {
            AssessmentLabel::A => self.count_a += 1,
            AssessmentLabel::B => self.count_b += 1,
            AssessmentLabel::C => self.count_c += 1,
            AssessmentLabel::D => self.count_d += 1,
        }
    }

    pub fn count(&self, label: AssessmentLabel) -> u64 {
        match label {
            AssessmentLabel::A => self.count_a,
            AssessmentLabel::B => self.count_b,
            AssessmentLabel::C => self.count_c,
            AssessmentLabel::D => self.count_d,
        }
    }

    pub fn total(&self) -> u64 {
        self.count_a + self.count_b + self.count_c + self.count_d
    }

    pub fn true_positives(&self) -> u64 {
        self.count_a
    }

    /// "No usability issue" plus "irrelevant/incorrect"; uncertain is excluded.
    pub fn false_positives(&self) -> u64 {
        self.count_b + self.count_d
    }
}

/// An exact, unreduced fraction `numerator / denominator` with a non-zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Proportion {
    pub numerator: u64,
    pub denominator: u64,
}

impl Proportion {
    /// `None` when the denominator is zero.
    pub fn new(numerator: u64, denominator: u64) -> Option<Self> {
        (denominator != 0).then_some(Self {
            numerator,
            denominator,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Value equality, so 26/44 equals 13/22.
    pub fn same_value(self, other: Proportion) -> bool {
        self.numerator as u128 * other.denominator as u128
            == other.numerator as u128 * self.denominator as u128
    }

    /// Decimal string with `places` digits, rounding half away from zero, computed exactly.
    pub fn to_decimal(self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let num = self.numerator as u128 * scale;
        let den = self.denominator as u128;
        let scaled = (2 * num + den) / (2 * den);
        let int = scaled / scale;
        if places == 0 {
            return int.to_string();
        }
        let frac = scaled % scale;
        format!("{int}.{frac:0width$}", width = places as usize)
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// A metric that may be undefined because its denominator is zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricValue {
    Defined { value: Proportion },
    Undefined { reason: String },
}

impl MetricValue {
    pub fn proportion(&self) -> Option<Proportion> {
        match self {
            MetricValue::Defined { value } => Some(*value),
            MetricValue::Undefined { .. } => None,
        }
    }
}

/// Landis and Koch agreement bands for Cohen's kappa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementBand {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl AgreementBand {
    pub fn for_kappa(kappa: f64) -> Self {
        if kappa < 0.0 {
            AgreementBand::Poor
        } else if kappa <= 0.20 {
            AgreementBand::Slight
        } else if kappa <= 0.40 {
            AgreementBand::Fair
        } else if kappa <= 0.60 {
            AgreementBand::Moderate
        } else if kappa <= 0.80 {
            AgreementBand::Substantial
        } else {
            AgreementBand::AlmostPerfect
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgreementBand::Poor => "Poor",
            AgreementBand::Slight => "Slight",
            AgreementBand::Fair => "Fair",
            AgreementBand::Moderate => "Moderate",
            AgreementBand::Substantial => "Substantial",
            AgreementBand::AlmostPerfect => "Almost perfect",
        }
    }
}

impl fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which label alphabet kappa is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// All four labels as distinct categories.
    FourCategory,
    /// `A` versus everything else.
    BinaryValid,
    /// Four categories over the items neither rater marked uncertain.
    ExcludeUncertain,
}

impl KappaMode {
    pub const ALL: [KappaMode; 3] = [
        KappaMode::FourCategory,
        KappaMode::BinaryValid,
        KappaMode::ExcludeUncertain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KappaMode::FourCategory => "four_category",
            KappaMode::BinaryValid => "binary_valid",
            KappaMode::ExcludeUncertain => "exclude_uncertain",
        }
    }
}

impl fmt::Display for KappaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KappaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KappaMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown kappa mode '{s}'"))
    }
}

/// Cohen's kappa between two raters. `value` is `None` when chance agreement is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub rater_x: String,
    pub rater_y: String,
    pub mode: KappaMode,
    /// Items that entered the computation.
    pub items: usize,
    pub observed_agreement: f64,
    pub chance_agreement: f64,
    pub value: Option<f64>,
}

impl Kappa {
    pub fn band(&self) -> Option<AgreementBand> {
        self.value.map(AgreementBand::for_kappa)
    }
}

/// Rule deciding which tool issues count as real for the cross-method comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityRule {
    /// Any rater labelled the issue `A`.
    #[default]
    AtLeastOneA,
    /// Every rater in the table labelled the issue `A`.
    AllRatersA,
}

impl ValidityRule {
    pub fn name(self) -> &'static str {
        match self {
            ValidityRule::AtLeastOneA => "at_least_one_A",
            ValidityRule::AllRatersA => "all_raters_A",
        }
    }
}

impl fmt::Display for ValidityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValidityRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "at_least_one_A" | "at-least-one-a" | "at_least_one_a" => Ok(ValidityRule::AtLeastOneA),
            "all_raters_A" | "all-raters-a" | "all_raters_a" => Ok(ValidityRule::AllRatersA),
            _ => Err(format!("unknown validity rule '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterMetrics {
    pub counts: ConfusionCounts,
    pub precision: MetricValue,
    pub recall: MetricValue,
}

/// Real issues the tool missed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalseNegatives {
    /// Testing and expert-review records with no valid tool issue in their match group.
    pub records: u64,
    /// The same, counting each deduplicated problem once.
    pub distinct_issues: u64,
}

/// Everything computed from an assessment table plus optional matching data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub raters: Vec<RaterMetrics>,
    pub validity_rule: ValidityRule,
    /// Tool issue ids accepted as real under `validity_rule`.
    pub valid_tool_issues: Vec<String>,
    #[serde(default)]
    pub false_negatives: Option<FalseNegatives>,
    pub kappa: Vec<Kappa>,
    /// Why no kappa was computed, when `kappa` is empty.
    #[serde(default)]
    pub kappa_unavailable: Option<String>,
    #[serde(default)]
    pub overlap: Option<OverlapSummary>,
}

impl MetricsReport {
    pub fn rater(&self, rater_id: &str) -> Option<&RaterMetrics> {
        self.raters.iter().find(|r| r.counts.rater_id == rater_id)
    }

    pub fn kappa_for(&self, mode: KappaMode) -> Option<&Kappa> {
        self.kappa.iter().find(|k| k.mode == mode)
    }
}
