//! Report layout. Every map is a `BTreeMap` and nothing depends on time or thread scheduling,
//! so identical inputs serialize to identical bytes.

use std::collections::BTreeMap;

use finsler_core::classify::{ClassificationReport, TheoremReport};
use finsler_core::closedform::DegenerationResidual;
use finsler_core::curvature::{IdentityKind, TangentSample};
use finsler_core::oracle::OracleConfig;
use finsler_core::tensor::Tensor;
use serde::Serialize;

use crate::sampling::SamplingSummary;
use crate::scenario::{FamilyFile, Scenario, ScenarioFile};
use crate::tolerances::Tolerances;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report<R: Serialize> {
    pub tool: &'static str,
    pub report_version: u32,
    pub command: &'static str,
    pub id: String,
    pub config: Config,
    pub results: R,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
}

impl<R: Serialize> Report<R> {
    pub fn new(command: &'static str, id: String, config: Config, results: R, assertions: Vec<Assertion>) -> Self {
        let pass = assertions.iter().all(|a| a.pass);
        Self { tool: "finsler", report_version: REPORT_VERSION, command, id, config, results, assertions, pass }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Config {
    Scenario(Box<ResolvedConfig>),
    Family(FamilyConfig),
}

/// The scenario after defaults and command-line overrides.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub path: String,
    pub scenario: ScenarioFile,
    pub tolerances: Tolerances,
    pub oracle: OracleConfig,
    pub douglas: bool,
    /// Numerical constancy of `[f1, f2]`, for products.
    pub warping_constant: Option<[bool; 2]>,
    pub proper: Option<bool>,
}

impl ResolvedConfig {
    pub fn of(s: &Scenario) -> Self {
        use finsler_core::dwp::Factor;
        let constant = s.model.product().map(|p| {
            [
                p.warping_is_constant(Factor::First).expect("checked at load"),
                p.warping_is_constant(Factor::Second).expect("checked at load"),
            ]
        });
        Self {
            path: s.path.display().to_string(),
            scenario: s.file.clone(),
            tolerances: s.tolerances,
            oracle: s.oracle(),
            douglas: s.douglas(),
            warping_constant: constant,
            proper: constant.map(|[a, b]| !a && !b),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyConfig {
    pub path: String,
    pub family: FamilyFile,
    pub cases: Vec<ResolvedConfig>,
}

/// One requested or built-in check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

impl Assertion {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), pass: value <= bound, value: Some(value), bound: Some(bound), detail: String::new() }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), pass: value > bound, value: Some(value), bound: Some(bound), detail: String::new() }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, value: None, bound: None, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    pub index: usize,
    pub group: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn points(samples: &[TangentSample]) -> Vec<SamplePoint> {
    samples.iter().enumerate().map(|(index, s)| SamplePoint { index, group: s.group, x: s.x.clone(), y: s.y.clone() }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub name: &'static str,
    pub kind: IdentityKind,
    pub value: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub shape: Vec<usize>,
    /// Closed-form values, row-major.
    pub data: Vec<f64>,
    /// Max-abs difference from the split engine tensor.
    pub engine_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub point: SamplePoint,
    pub f_squared: f64,
    /// Homogeneity-rescaled max-abs norms.
    pub norms: BTreeMap<String, f64>,
    pub tensors: BTreeMap<String, Tensor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<Vec<IdentityRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BTreeMap<String, BTreeMap<String, BlockRecord>>>,
    /// Rescaled warping coupling norms, for products.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneration: Option<Vec<DegenerationResidual>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputeSummary {
    pub max_norms: BTreeMap<String, f64>,
    pub max_identity: BTreeMap<String, f64>,
    pub max_block_diff: BTreeMap<String, f64>,
    pub max_couplings: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneration: Option<DegenerationSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerationSummary {
    pub pure: f64,
    pub mixed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputeResults {
    pub sampling: SamplingSummary,
    pub samples: Vec<SampleRecord>,
    pub summary: ComputeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorReports {
    pub proper: bool,
    pub f1_constant: bool,
    pub f2_constant: bool,
    pub factor1: ClassificationReport,
    pub factor2: ClassificationReport,
    pub couplings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyResults {
    pub sampling: SamplingSummary,
    pub samples: Vec<SamplePoint>,
    pub classification: ClassificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<FactorReports>,
    pub theorems: Vec<TheoremOutcome>,
}

/// A theorem report, or the reason the case falls outside the theorem's hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TheoremOutcome {
    Checked(TheoremReport),
    NotApplicable { theorem: String, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub label: String,
    pub path: String,
    pub sampling: SamplingSummary,
    pub proper: bool,
    pub f1_constant: bool,
    pub f2_constant: bool,
    pub norms: BTreeMap<String, f64>,
    pub factor1_norms: BTreeMap<String, f64>,
    pub factor2_norms: BTreeMap<String, f64>,
    pub couplings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremResults {
    pub theorems: Vec<TheoremReport>,
    pub cases: Vec<CaseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSample {
    pub index: usize,
    pub deviations: BTreeMap<String, f64>,
}

/// Error of the finite-difference reconstruction against the jets as the step shrinks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub direct_step: f64,
    pub outer_step: f64,
    pub halvings: usize,
    pub errors: BTreeMap<String, f64>,
    /// `log2` of the error ratio to the previous row; about 2 for plain central differences.
    pub observed_order: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub samples: usize,
    /// Plain central differences, halving the step each row.
    pub central: Vec<SweepRow>,
    /// Fixed initial step, one more Richardson level each row.
    pub richardson: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResults {
    pub sampling: SamplingSummary,
    pub samples: Vec<SamplePoint>,
    pub deviations: Vec<OracleSample>,
    pub max_deviation: BTreeMap<String, f64>,
    pub tolerance: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}
