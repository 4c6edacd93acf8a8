//! Predicates over sample sets, isotropy fits and the classification-theorem harness.
//!
//! Every residual is a max-absolute-component norm rescaled by `F^-d`, where `d` is the fiber
//! homogeneity degree of the tensor, so that thresholds do not depend on `|y|`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::closedform::{scaled_coupling_terms, FactorPair};
use crate::curvature::{compute_bundle, BundleOptions, CurvatureBundle, CurvatureError, TangentSample};
use crate::dwp::{DwpScenario, Factor};
use crate::metric::{FinslerMetric, MetricError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("no admissible samples to classify")]
    NoSamples,
    #[error("unknown threshold '{0}'")]
    UnknownThreshold(String),
    #[error("unknown theorem '{0}'")]
    UnknownTheorem(String),
    #[error("theorem family is empty")]
    EmptyFamily,
    #[error("{theorem}: case '{case}' violates the hypothesis: {hypothesis}")]
    HypothesisViolated { theorem: &'static str, case: String, hypothesis: String },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Decision thresholds; all are configurable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Below this a tensor is claimed to vanish.
    pub zero_claim: f64,
    /// Above this a tensor is claimed not to vanish.
    pub nonzero_claim: f64,
    /// Largest admissible variance of a fitted `c` across fibers over one base point.
    pub isotropy_variance: f64,
    /// Variance above which a fit is claimed to be fiber dependent.
    pub isotropy_variance_nonzero: f64,
    pub dually_flat_zero: f64,
    pub dually_flat_nonzero: f64,
    /// Landsberg and Berwald levels of the Landsberg-Berwald consistency check.
    pub landsberg_zero: f64,
    pub berwald_nonzero: f64,
    /// Douglas and Cartan levels of the vanishing-Douglas check.
    pub douglas_nonzero: f64,
    pub cartan_nonzero: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            zero_claim: 1e-6,
            nonzero_claim: 1e-3,
            isotropy_variance: 1e-8,
            isotropy_variance_nonzero: 1e-4,
            dually_flat_zero: 1e-10,
            dually_flat_nonzero: 1e-6,
            landsberg_zero: 1e-8,
            berwald_nonzero: 1e-5,
            douglas_nonzero: 1e-6,
            cartan_nonzero: 1e-3,
        }
    }
}

impl Thresholds {
    pub const NAMES: [&'static str; 10] = [
        "zero_claim",
        "nonzero_claim",
        "isotropy_variance",
        "isotropy_variance_nonzero",
        "dually_flat_zero",
        "dually_flat_nonzero",
        "landsberg_zero",
        "berwald_nonzero",
        "douglas_nonzero",
        "cartan_nonzero",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "zero_claim" => &mut self.zero_claim,
            "nonzero_claim" => &mut self.nonzero_claim,
            "isotropy_variance" => &mut self.isotropy_variance,
            "isotropy_variance_nonzero" => &mut self.isotropy_variance_nonzero,
            "dually_flat_zero" => &mut self.dually_flat_zero,
            "dually_flat_nonzero" => &mut self.dually_flat_nonzero,
            "landsberg_zero" => &mut self.landsberg_zero,
            "berwald_nonzero" => &mut self.berwald_nonzero,
            "douglas_nonzero" => &mut self.douglas_nonzero,
            "cartan_nonzero" => &mut self.cartan_nonzero,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ClassifyError> {
        *self.slot(name).ok_or_else(|| ClassifyError::UnknownThreshold(name.to_string()))? = value;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).map(|v| *v)
    }
}

/// Outcome of a two-sided vanishing decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Zero,
    Nonzero,
    Ambiguous,
}

impl Claim {
    pub fn of(residual: f64, zero: f64, nonzero: f64) -> Self {
        if residual < zero {
            Self::Zero
        } else if residual > nonzero {
            Self::Nonzero
        } else {
            Self::Ambiguous
        }
    }

    /// Truth value of "the tensor vanishes".
    pub fn vanishes(self) -> Truth {
        match self {
            Self::Zero => Truth::True,
            Self::Nonzero => Truth::False,
            Self::Ambiguous => Truth::Unknown,
        }
    }
}

/// Three-valued logic for theorem atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::True
        } else {
            Self::False
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Self::False, _) | (_, Self::False) => Self::False,
            (Self::True, Self::True) => Self::True,
            _ => Self::Unknown,
        }
    }

    pub fn or(self, other: Self) -> Self {
        match (self, other) {
            (Self::True, _) | (_, Self::True) => Self::True,
            (Self::False, Self::False) => Self::False,
            _ => Self::Unknown,
        }
    }

    pub fn not(self) -> Self {
        match self {
            Self::True => Self::False,
            Self::False => Self::True,
            Self::Unknown => Self::Unknown,
        }
    }

    pub fn all(items: impl IntoIterator<Item = Self>) -> Self {
        items.into_iter().fold(Self::True, Self::and)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateResult {
    pub residual: f64,
    pub threshold: f64,
    pub verdict: bool,
    pub claim: Claim,
}

impl PredicateResult {
    fn new(residual: f64, zero: f64, nonzero: f64) -> Self {
        let claim = Claim::of(residual, zero, nonzero);
        Self { residual, threshold: zero, verdict: residual < zero, claim }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsotropyMode {
    /// `E = (n+1)/2 c F^-1 h`.
    MeanBerwald,
    /// `L = c F C`.
    Landsberg,
    /// `J = c F I`.
    MeanLandsberg,
}

impl IsotropyMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::MeanBerwald => "mean_berwald",
            Self::Landsberg => "landsberg",
            Self::MeanLandsberg => "mean_landsberg",
        }
    }

    /// `(lhs, rhs, fiber degree)` at one bundle.
    fn sides(self, b: &CurvatureBundle) -> (Tensor, Tensor, i32) {
        let f = libm::sqrt(b.f_squared);
        match self {
            Self::MeanBerwald => {
                let n = b.dim() as f64;
                (b.mean_berwald.clone(), b.angular.scaled(0.5 * (n + 1.0) / f), -1)
            }
            Self::Landsberg => (b.landsberg.clone(), b.cartan.scaled(f), 0),
            Self::MeanLandsberg => (b.mean_landsberg.clone(), b.mean_cartan.scaled(f), 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFit {
    pub group: usize,
    /// `None` when the reference tensor is too small to fit against.
    pub c: Option<f64>,
    /// Coefficient under the opposite sign convention (`L + c F C = 0`); Landsberg mode only.
    pub c_opposite_sign: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyFit {
    pub mode: IsotropyMode,
    pub samples: Vec<SampleFit>,
    pub skipped: usize,
    pub max_residual: f64,
    /// Largest variance of `c` among samples sharing a base point.
    pub y_variance: f64,
    pub verdict: bool,
    pub claim: Claim,
}

/// Scale of a tensor with fiber degree `degree` at `F = f`.
fn rescale(value: f64, f: f64, degree: i32) -> f64 {
    value * libm::pow(f, -(degree as f64))
}

/// Least-squares `c` per sample for the chosen isotropy relation.
pub fn fit_isotropy_coefficient(bundles: &[CurvatureBundle], mode: IsotropyMode, thresholds: &Thresholds) -> IsotropyFit {
    let mut samples = Vec::with_capacity(bundles.len());
    let mut skipped = 0;
    for b in bundles {
        let f = libm::sqrt(b.f_squared);
        let (lhs, rhs, degree) = mode.sides(b);
        let rhs_norm = rescale(rhs.max_abs(), f, degree);
        let fit = if rhs_norm > thresholds.zero_claim {
            let num: f64 = lhs.data().iter().zip(rhs.data()).map(|(a, r)| a * r).sum();
            let den: f64 = rhs.data().iter().map(|r| r * r).sum();
            let c = num / den;
            let resid = lhs.data().iter().zip(rhs.data()).fold(0.0f64, |m, (a, r)| m.max(libm::fabs(a - c * r)));
            let opp = (mode == IsotropyMode::Landsberg).then_some(-c);
            SampleFit { group: b.sample.group, c: Some(c), c_opposite_sign: opp, residual: rescale(resid, f, degree) }
        } else {
            skipped += 1;
            SampleFit { group: b.sample.group, c: None, c_opposite_sign: None, residual: rescale(lhs.max_abs(), f, degree) }
        };
        samples.push(fit);
    }
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in &samples {
        if let Some(c) = s.c {
            groups.entry(s.group).or_default().push(c);
        }
    }
    let y_variance = groups
        .values()
        .filter(|cs| cs.len() > 1)
        .map(|cs| {
            let mean = cs.iter().sum::<f64>() / cs.len() as f64;
            cs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / cs.len() as f64
        })
        .fold(0.0, f64::max);
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let verdict = max_residual < thresholds.zero_claim && y_variance < thresholds.isotropy_variance;
    let claim = if verdict {
        Claim::Zero
    } else if max_residual > thresholds.nonzero_claim || y_variance > thresholds.isotropy_variance_nonzero {
        Claim::Nonzero
    } else {
        Claim::Ambiguous
    };
    IsotropyFit { mode, samples, skipped, max_residual, y_variance, verdict, claim }
}

/// Rescaled max-abs norms of every tensor in a bundle.
pub fn tensor_norms(b: &CurvatureBundle) -> BTreeMap<String, f64> {
    let f = libm::sqrt(b.f_squared);
    let mut out = BTreeMap::new();
    let mut put = |name: &str, t: &Tensor, degree: i32| {
        out.insert(name.to_string(), rescale(t.max_abs(), f, degree));
    };
    put("cartan", &b.cartan, -1);
    put("mean_cartan", &b.mean_cartan, -1);
    put("angular", &b.angular, 0);
    put("spray", &b.spray, 2);
    put("berwald", &b.berwald, -1);
    put("mean_berwald", &b.mean_berwald, -1);
    if let Some(d) = &b.douglas {
        put("douglas", d, -1);
    }
    put("landsberg", &b.landsberg, 0);
    put("mean_landsberg", &b.mean_landsberg, 0);
    put("dually_flat", &b.dually_flat, 2);
    out
}

pub const PREDICATES: [&str; 10] = [
    "riemannian",
    "berwald",
    "weakly_berwald",
    "isotropic_mean_berwald",
    "douglas",
    "landsberg",
    "weakly_landsberg",
    "relatively_isotropic_landsberg",
    "relatively_isotropic_mean_landsberg",
    "dually_flat",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub scenario: String,
    pub sample_count: usize,
    pub thresholds: Thresholds,
    /// Max over samples of the rescaled tensor norms.
    pub norms: BTreeMap<String, f64>,
    pub predicates: BTreeMap<String, PredicateResult>,
    pub fits: BTreeMap<String, IsotropyFit>,
}

impl ClassificationReport {
    pub fn predicate(&self, name: &str) -> &PredicateResult {
        &self.predicates[name]
    }

    pub fn claim(&self, name: &str) -> Claim {
        self.predicates[name].claim
    }

    pub fn holds(&self, name: &str) -> Truth {
        self.predicates[name].claim.vanishes()
    }

    pub fn norm(&self, name: &str) -> f64 {
        self.norms.get(name).copied().unwrap_or(0.0)
    }
}

/// Classifies precomputed bundles.
pub fn classify_bundles(scenario: &str, bundles: &[CurvatureBundle], thresholds: &Thresholds) -> Result<ClassificationReport, ClassifyError> {
    if bundles.is_empty() {
        return Err(ClassifyError::NoSamples);
    }
    let mut norms: BTreeMap<String, f64> = BTreeMap::new();
    for b in bundles {
        for (k, v) in tensor_norms(b) {
            let e = norms.entry(k).or_insert(0.0);
            *e = e.max(v);
        }
    }
    let t = thresholds;
    let mut predicates = BTreeMap::new();
    let mut tensor_predicate = |name: &str, tensor: &str| {
        if let Some(&r) = norms.get(tensor) {
            predicates.insert(name.to_string(), PredicateResult::new(r, t.zero_claim, t.nonzero_claim));
        }
    };
    tensor_predicate("riemannian", "cartan");
    tensor_predicate("berwald", "berwald");
    tensor_predicate("weakly_berwald", "mean_berwald");
    tensor_predicate("douglas", "douglas");
    tensor_predicate("landsberg", "landsberg");
    tensor_predicate("weakly_landsberg", "mean_landsberg");
    tensor_predicate("dually_flat", "dually_flat");

    let mut fits = BTreeMap::new();
    for (predicate, mode) in [
        ("isotropic_mean_berwald", IsotropyMode::MeanBerwald),
        ("relatively_isotropic_landsberg", IsotropyMode::Landsberg),
        ("relatively_isotropic_mean_landsberg", IsotropyMode::MeanLandsberg),
    ] {
        let fit = fit_isotropy_coefficient(bundles, mode, t);
        predicates.insert(
            predicate.to_string(),
            PredicateResult { residual: fit.max_residual, threshold: t.zero_claim, verdict: fit.verdict, claim: fit.claim },
        );
        fits.insert(mode.name().to_string(), fit);
    }
    Ok(ClassificationReport { scenario: scenario.to_string(), sample_count: bundles.len(), thresholds: *t, norms, predicates, fits })
}

/// Evaluates and classifies `metric` over the admissible subset of `samples`.
pub fn classify<M: FinslerMetric>(
    scenario: &str,
    metric: &M,
    samples: &[TangentSample],
    thresholds: &Thresholds,
) -> Result<ClassificationReport, ClassifyError> {
    let bundles: Vec<CurvatureBundle> = samples
        .iter()
        .filter(|s| s.is_admissible(metric))
        .filter_map(|s| compute_bundle(metric, s, BundleOptions::default()).ok())
        .collect();
    classify_bundles(scenario, &bundles, thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TheoremId {
    T3_1,
    T3_2,
    T4_2,
    T4_4,
    T5_2,
    T6_2,
    T6_4,
    T6_5,
    T7_2,
    T7_3,
    T8_1,
    T8_2,
}

impl TheoremId {
    pub const ALL: [TheoremId; 12] = [
        Self::T3_1,
        Self::T3_2,
        Self::T4_2,
        Self::T4_4,
        Self::T5_2,
        Self::T6_2,
        Self::T6_4,
        Self::T6_5,
        Self::T7_2,
        Self::T7_3,
        Self::T8_1,
        Self::T8_2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::T3_1 => "T3.1",
            Self::T3_2 => "T3.2",
            Self::T4_2 => "T4.2",
            Self::T4_4 => "T4.4",
            Self::T5_2 => "T5.2",
            Self::T6_2 => "T6.2",
            Self::T6_4 => "T6.4",
            Self::T6_5 => "T6.5",
            Self::T7_2 => "T7.2",
            Self::T7_3 => "T7.3",
            Self::T8_1 => "T8.1",
            Self::T8_2 => "T8.2",
        }
    }

    pub fn parse(text: &str) -> Result<Self, ClassifyError> {
        let t = text.trim().to_ascii_uppercase().replace('_', ".");
        Self::ALL.into_iter().find(|id| id.as_str() == t).ok_or_else(|| ClassifyError::UnknownTheorem(text.to_string()))
    }

    pub fn statement(self) -> &'static str {
        match self {
            Self::T3_1 => "a proper DWP with vanishing Berwald curvature has Riemannian factors",
            Self::T3_2 => "with exactly one constant warping, F is Berwald iff the constant-warped factor is Riemannian, the other is Berwald and its Berwald coupling vanishes",
            Self::T4_2 => "a proper DWP is weakly Berwald iff both factors are weakly Berwald and both mean Berwald couplings vanish",
            Self::T4_4 => "isotropic mean Berwald curvature implies weakly Berwald when one mean Berwald coupling vanishes",
            Self::T5_2 => "a proper DWP with a non-Riemannian factor has nonvanishing Douglas curvature",
            Self::T6_2 => "a proper DWP is Landsberg iff it is Berwald",
            Self::T6_4 => "relatively isotropic Landsberg curvature implies Landsberg",
            Self::T6_5 => "a proper DWP with relatively isotropic Landsberg curvature has Riemannian factors",
            Self::T7_2 => "with exactly one constant warping, F is weakly Landsberg iff the constant-warped factor is Riemannian, the other is weakly Landsberg and its mean Landsberg coupling vanishes",
            Self::T7_3 => "with a constant warping, relatively isotropic mean Landsberg curvature implies weakly Landsberg",
            Self::T8_1 => "F is locally dually flat iff both factors are and both warpings are constant",
            Self::T8_2 => "no proper DWP is locally dually flat",
        }
    }
}

impl core::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One scenario of a theorem family with its sample grid.
#[derive(Debug, Clone)]
pub struct TheoremCase {
    pub label: String,
    pub scenario: DwpScenario,
    pub samples: Vec<TangentSample>,
}

/// Everything the theorem checks read from one case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseEvaluation {
    pub label: String,
    pub sample_count: usize,
    pub proper: bool,
    pub f1_constant: bool,
    pub f2_constant: bool,
    pub dwp: ClassificationReport,
    pub factor1: ClassificationReport,
    pub factor2: ClassificationReport,
    /// Max over samples of the rescaled coupling norms.
    pub couplings: BTreeMap<String, f64>,
}

impl CaseEvaluation {
    fn factor(&self, f: Factor) -> &ClassificationReport {
        match f {
            Factor::First => &self.factor1,
            Factor::Second => &self.factor2,
        }
    }

    fn coupling_vanishes(&self, name: &str, t: &Thresholds) -> Truth {
        Claim::of(self.couplings.get(name).copied().unwrap_or(0.0), t.zero_claim, t.nonzero_claim).vanishes()
    }

    fn dually_flat(report: &ClassificationReport, t: &Thresholds) -> Truth {
        Claim::of(report.norm("dually_flat"), t.dually_flat_zero, t.dually_flat_nonzero).vanishes()
    }
}

/// Evaluates the DWP and both factors at every admissible sample of a case.
pub fn evaluate_case(case: &TheoremCase, thresholds: &Thresholds) -> Result<CaseEvaluation, ClassifyError> {
    let s = &case.scenario;
    let mut dwp = Vec::new();
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    let mut couplings: BTreeMap<String, f64> = BTreeMap::new();
    for sample in case.samples.iter().filter(|x| x.is_admissible(s)) {
        let bundle = match compute_bundle(s, sample, BundleOptions::default()) {
            Ok(b) => b,
            Err(CurvatureError::NotPositiveDefinite(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let pair = FactorPair::new(s, sample)?;
        for (k, v) in scaled_coupling_terms(&pair) {
            let e = couplings.entry(k).or_insert(0.0);
            *e = e.max(v);
        }
        let mut b1 = pair.first.bundle;
        let mut b2 = pair.second.bundle;
        b1.sample.group = sample.group;
        b2.sample.group = sample.group;
        dwp.push(bundle);
        f1.push(b1);
        f2.push(b2);
    }
    Ok(CaseEvaluation {
        label: case.label.clone(),
        sample_count: dwp.len(),
        proper: s.is_proper()?,
        f1_constant: s.warping_is_constant(Factor::First)?,
        f2_constant: s.warping_is_constant(Factor::Second)?,
        dwp: classify_bundles(&case.label, &dwp, thresholds)?,
        factor1: classify_bundles(&format!("{}/M1", case.label), &f1, thresholds)?,
        factor2: classify_bundles(&format!("{}/M2", case.label), &f2, thresholds)?,
        couplings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    /// Hypothesis and conclusion both decided and consistent.
    Confirmed,
    Contradiction,
    /// Some atom fell between the zero and nonzero thresholds.
    Undecided,
    /// The case does not exercise the statement (premise false).
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub label: String,
    pub samples: usize,
    pub status: CaseStatus,
    pub lhs: Truth,
    pub rhs: Truth,
    pub note: String,
    pub evidence: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub statement: &'static str,
    pub grid: String,
    pub pass: bool,
    pub cases: Vec<CaseOutcome>,
}

fn implication(premise: Truth, conclusion: Truth) -> CaseStatus {
    match (premise, conclusion) {
        (Truth::True, Truth::True) => CaseStatus::Confirmed,
        (Truth::True, Truth::False) => CaseStatus::Contradiction,
        (Truth::False, _) | (_, Truth::True) => CaseStatus::Vacuous,
        _ => CaseStatus::Undecided,
    }
}

fn biconditional(lhs: Truth, rhs: Truth) -> CaseStatus {
    match (lhs, rhs) {
        (Truth::Unknown, _) | (_, Truth::Unknown) => CaseStatus::Undecided,
        (a, b) if a == b => CaseStatus::Confirmed,
        _ => CaseStatus::Contradiction,
    }
}

fn other(f: Factor) -> Factor {
    match f {
        Factor::First => Factor::Second,
        Factor::Second => Factor::First,
    }
}

fn suffix(f: Factor) -> &'static str {
    match f {
        Factor::First => "1",
        Factor::Second => "2",
    }
}

/// The factor whose warping is constant when exactly one warping is.
fn single_constant(e: &CaseEvaluation) -> Option<Factor> {
    match (e.f1_constant, e.f2_constant) {
        (true, false) => Some(Factor::First),
        (false, true) => Some(Factor::Second),
        _ => None,
    }
}

struct Check {
    status: CaseStatus,
    lhs: Truth,
    rhs: Truth,
    note: String,
    evidence: Vec<(&'static str, f64)>,
}

fn violated(id: TheoremId, e: &CaseEvaluation, hypothesis: &str) -> ClassifyError {
    ClassifyError::HypothesisViolated { theorem: id.as_str(), case: e.label.clone(), hypothesis: hypothesis.to_string() }
}

fn check_case(id: TheoremId, e: &CaseEvaluation, t: &Thresholds) -> Result<Check, ClassifyError> {
    let dwp = &e.dwp;
    let riem = |f: Factor| e.factor(f).holds("riemannian");
    let mut evidence = Vec::new();
    let check = match id {
        TheoremId::T3_1 => {
            let premise = Truth::from_bool(e.proper).and(dwp.holds("berwald"));
            let conclusion = riem(Factor::First).and(riem(Factor::Second));
            evidence.extend([("berwald", dwp.norm("berwald")), ("cartan_1", e.factor1.norm("cartan")), ("cartan_2", e.factor2.norm("cartan"))]);
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T3_2 | TheoremId::T7_2 => {
            let c = single_constant(e).ok_or_else(|| violated(id, e, "exactly one warping is constant"))?;
            let o = other(c);
            let (predicate, coupling) = if id == TheoremId::T3_2 {
                ("berwald", format!("berwald_wp_{}", suffix(o)))
            } else {
                ("weakly_landsberg", format!("mean_landsberg_{}", suffix(o)))
            };
            let lhs = dwp.holds(predicate);
            let rhs = riem(c).and(e.factor(o).holds(predicate)).and(e.coupling_vanishes(&coupling, t));
            evidence.extend([
                ("dwp", dwp.norm(if id == TheoremId::T3_2 { "berwald" } else { "mean_landsberg" })),
                ("cartan_constant_warped", e.factor(c).norm("cartan")),
                ("other_factor", e.factor(o).predicate(predicate).residual),
                ("coupling", e.couplings.get(&coupling).copied().unwrap_or(0.0)),
            ]);
            let note = format!("f{} constant", suffix(c));
            Check { status: biconditional(lhs, rhs), lhs, rhs, note, evidence }
        }
        TheoremId::T4_2 => {
            if !e.proper {
                return Err(violated(id, e, "the DWP is proper (neither warping constant)"));
            }
            let lhs = dwp.holds("weakly_berwald");
            let rhs = e
                .factor1
                .holds("weakly_berwald")
                .and(e.factor2.holds("weakly_berwald"))
                .and(e.coupling_vanishes("mean_berwald_trace_1", t))
                .and(e.coupling_vanishes("mean_berwald_trace_2", t));
            evidence.extend([
                ("mean_berwald", dwp.norm("mean_berwald")),
                ("mean_berwald_1", e.factor1.norm("mean_berwald")),
                ("mean_berwald_2", e.factor2.norm("mean_berwald")),
                ("mean_berwald_trace_1", e.couplings["mean_berwald_trace_1"]),
                ("mean_berwald_trace_2", e.couplings["mean_berwald_trace_2"]),
            ]);
            Check { status: biconditional(lhs, rhs), lhs, rhs, note: String::new(), evidence }
        }
        TheoremId::T4_4 => {
            let side = e.coupling_vanishes("mean_berwald_trace_1", t).or(e.coupling_vanishes("mean_berwald_trace_2", t));
            if side != Truth::True {
                return Err(violated(id, e, "one of the mean Berwald couplings vanishes"));
            }
            let premise = dwp.holds("isotropic_mean_berwald");
            let conclusion = dwp.holds("weakly_berwald");
            evidence.extend([("isotropy_residual", dwp.predicate("isotropic_mean_berwald").residual), ("mean_berwald", dwp.norm("mean_berwald"))]);
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T5_2 => {
            let non_riemannian = e.factor1.norm("cartan") > t.cartan_nonzero || e.factor2.norm("cartan") > t.cartan_nonzero;
            let premise = Truth::from_bool(e.proper && non_riemannian);
            let conclusion = Truth::from_bool(dwp.norm("douglas") > t.douglas_nonzero);
            evidence.extend([("douglas", dwp.norm("douglas")), ("cartan_1", e.factor1.norm("cartan")), ("cartan_2", e.factor2.norm("cartan"))]);
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T6_2 => {
            let l = dwp.norm("landsberg");
            let b = dwp.norm("berwald");
            let premise = Truth::from_bool(e.proper && l < t.landsberg_zero);
            let conclusion = Truth::from_bool(b <= t.berwald_nonzero);
            let mut status = implication(premise, conclusion);
            // the definitional direction: Berwald forces Landsberg
            if b < t.zero_claim && l > t.nonzero_claim {
                status = CaseStatus::Contradiction;
            }
            evidence.extend([("landsberg", l), ("berwald", b)]);
            Check { status, lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T6_4 | TheoremId::T6_5 => {
            let premise = dwp.holds("relatively_isotropic_landsberg");
            let (premise, conclusion) = if id == TheoremId::T6_4 {
                (premise, dwp.holds("landsberg"))
            } else {
                (Truth::from_bool(e.proper).and(premise), riem(Factor::First).and(riem(Factor::Second)))
            };
            evidence.extend([
                ("isotropy_residual", dwp.predicate("relatively_isotropic_landsberg").residual),
                ("landsberg", dwp.norm("landsberg")),
                ("cartan_1", e.factor1.norm("cartan")),
                ("cartan_2", e.factor2.norm("cartan")),
            ]);
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T7_3 => {
            if !(e.f1_constant || e.f2_constant) {
                return Err(violated(id, e, "at least one warping is constant"));
            }
            let premise = dwp.holds("relatively_isotropic_mean_landsberg");
            let conclusion = dwp.holds("weakly_landsberg");
            evidence.extend([
                ("isotropy_residual", dwp.predicate("relatively_isotropic_mean_landsberg").residual),
                ("mean_landsberg", dwp.norm("mean_landsberg")),
            ]);
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
        TheoremId::T8_1 => {
            let lhs = CaseEvaluation::dually_flat(dwp, t);
            let rhs = CaseEvaluation::dually_flat(&e.factor1, t)
                .and(CaseEvaluation::dually_flat(&e.factor2, t))
                .and(Truth::from_bool(e.f1_constant && e.f2_constant));
            evidence.extend([
                ("dually_flat", dwp.norm("dually_flat")),
                ("dually_flat_1", e.factor1.norm("dually_flat")),
                ("dually_flat_2", e.factor2.norm("dually_flat")),
            ]);
            Check { status: biconditional(lhs, rhs), lhs, rhs, note: String::new(), evidence }
        }
        TheoremId::T8_2 => {
            let premise = Truth::from_bool(e.proper);
            let conclusion = Truth::from_bool(dwp.norm("dually_flat") > t.dually_flat_nonzero);
            evidence.push(("dually_flat", dwp.norm("dually_flat")));
            Check { status: implication(premise, conclusion), lhs: premise, rhs: conclusion, note: String::new(), evidence }
        }
    };
    Ok(check)
}

/// Checks one theorem over precomputed case evaluations.
pub fn verify_theorem_on(id: TheoremId, evaluations: &[CaseEvaluation], thresholds: &Thresholds) -> Result<TheoremReport, ClassifyError> {
    if evaluations.is_empty() {
        return Err(ClassifyError::EmptyFamily);
    }
    let mut cases = Vec::with_capacity(evaluations.len());
    for e in evaluations {
        let c = check_case(id, e, thresholds)?;
        cases.push(CaseOutcome {
            label: e.label.clone(),
            samples: e.sample_count,
            status: c.status,
            lhs: c.lhs,
            rhs: c.rhs,
            note: c.note,
            evidence: c.evidence.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        });
    }
    let pass = cases.iter().all(|c| c.status != CaseStatus::Contradiction) && cases.iter().any(|c| c.status == CaseStatus::Confirmed);
    let total: usize = cases.iter().map(|c| c.samples).sum();
    let grid = format!("{} cases, {} admissible samples", cases.len(), total);
    Ok(TheoremReport { theorem: id, statement: id.statement(), grid, pass, cases })
}

/// Evaluates every case and checks the theorem.
pub fn verify_theorem(id: TheoremId, family: &[TheoremCase], thresholds: &Thresholds) -> Result<TheoremReport, ClassifyError> {
    let evaluations = family.iter().map(|c| evaluate_case(c, thresholds)).collect::<Result<Vec<_>, _>>()?;
    verify_theorem_on(id, &evaluations, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claims_and_logic() {
        assert_eq!(Claim::of(1e-7, 1e-6, 1e-3), Claim::Zero);
        assert_eq!(Claim::of(1e-4, 1e-6, 1e-3), Claim::Ambiguous);
        assert_eq!(Claim::of(1e-2, 1e-6, 1e-3), Claim::Nonzero);
        assert_eq!(Truth::True.and(Truth::Unknown), Truth::Unknown);
        assert_eq!(Truth::False.and(Truth::Unknown), Truth::False);
        assert_eq!(Truth::True.or(Truth::Unknown), Truth::True);
        assert_eq!(implication(Truth::False, Truth::False), CaseStatus::Vacuous);
        assert_eq!(biconditional(Truth::False, Truth::False), CaseStatus::Confirmed);
        assert_eq!(biconditional(Truth::True, Truth::False), CaseStatus::Contradiction);
    }

    #[test]
    fn thresholds_by_name() {
        let mut t = Thresholds::default();
        t.set("zero_claim", 1e-7).unwrap();
        assert_eq!(t.get("zero_claim"), Some(1e-7));
        assert!(t.set("bogus", 1.0).is_err());
        for name in Thresholds::NAMES {
            assert!(t.get(name).is_some());
        }
    }

    #[test]
    fn theorem_ids_round_trip() {
        for id in TheoremId::ALL {
            assert_eq!(TheoremId::parse(id.as_str()).unwrap(), id);
        }
        assert_eq!(TheoremId::parse("t6_2").unwrap(), TheoremId::T6_2);
        assert!(TheoremId::parse("T9.9").is_err());
    }
}
