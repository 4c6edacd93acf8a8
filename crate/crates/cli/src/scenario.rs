//! Scenario and theorem-family files: serde schema, defaults and validation into core objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use finsler_core::classify::{TheoremId, PREDICATES};
use finsler_core::dwp::{DwpScenario, Factor, PROPER_GRID_POINTS};
use finsler_core::expr::Expr;
use finsler_core::metric::{base_variable_names, tangent_variable_names, ChartBox, FactorMetric, MetricFamily, Warping};
use finsler_core::oracle::{FdConfig, OracleConfig};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::model::Model;
use crate::tolerances::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

/// Tensor names accepted in `outputs.tensors`, in report order.
pub const TENSOR_NAMES: [&str; 14] = [
    "g",
    "g_inv",
    "y_lower",
    "cartan",
    "mean_cartan",
    "angular",
    "spray",
    "berwald",
    "mean_berwald",
    "mean_berwald_dy",
    "douglas",
    "landsberg",
    "mean_landsberg",
    "dually_flat",
];

/// Tensors that need order-6 jets.
pub const DOUGLAS_TENSORS: [&str; 2] = ["mean_berwald_dy", "douglas"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// One factor is a plain Finsler metric; two factors form a doubly warped product.
    pub factors: Vec<FactorSpec>,
    /// `[f1, f2]` for two factors; must be empty for one.
    #[serde(default)]
    pub warpings: Vec<WarpingSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub jets: JetSpec,
    /// Overrides by tolerance name; see `finsler schema` and the README for the list.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct FactorSpec {
    pub dim: usize,
    pub chart: ChartSpec,
    #[serde(flatten)]
    pub family: FamilySpec,
}

/// Metric family, tagged by `family`. Coefficient expressions use `x1..xn`; custom `F^2`
/// expressions also use `y1..yn`. Names are local to the factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Euclidean {},
    RiemannianDiag { coefficients: Vec<String> },
    /// `F = sqrt(sum a_i (y^i)^2) + sum b_i y^i`.
    Randers { alpha: Vec<String>, beta: Vec<String> },
    /// `F^2 = sqrt(sum c_ij (y^i)^2 (y^j)^2)`, `c` constant and symmetric.
    MinkowskiQuartic { coefficients: Vec<Vec<f64>> },
    CustomExpr { f_squared: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WarpingSpec {
    /// Expression in the owning factor's coordinates `x1..xn`.
    pub expr: String,
    /// Region where the warping must be positive; defaults to the factor chart.
    #[serde(default)]
    pub positivity: Option<ChartSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    pub count: usize,
    pub seed: u64,
    /// Fibers drawn at each base point; they share an isotropy-fit group.
    pub fibers_per_point: usize,
    /// Fiber lengths, cycled within each group.
    pub norms: Vec<f64>,
    /// Draw fiber directions on the unit sphere before rescaling to `norms`.
    pub normalize: bool,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { count: 10, seed: 0, fibers_per_point: 4, norms: vec![0.5, 1.0, 2.0], normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct JetSpec {
    /// 6 enables `dE/dy` and the Douglas tensor, 5 skips them.
    pub max_order: usize,
}

impl Default for JetSpec {
    fn default() -> Self {
        Self { max_order: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub direct_step: f64,
    pub direct_halvings: usize,
    pub outer_step: f64,
    pub outer_halvings: usize,
    pub base_scale: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        let d = OracleConfig::default();
        Self {
            direct_step: d.direct.step,
            direct_halvings: d.direct.halvings,
            outer_step: d.outer.step,
            outer_halvings: d.outer.halvings,
            base_scale: d.base_scale,
        }
    }
}

impl OracleSpec {
    pub fn config(&self) -> OracleConfig {
        OracleConfig {
            direct: FdConfig::new(self.direct_step, self.direct_halvings),
            outer: FdConfig::new(self.outer_step, self.outer_halvings),
            base_scale: self.base_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Tensors dumped per sample and compared by `oracle-check`; `null` means all available.
    pub tensors: Option<Vec<String>>,
    /// Closed-form block comparison (products only).
    pub blocks: bool,
    /// Predicates kept in classification reports; `null` means all.
    pub predicates: Option<Vec<String>>,
    /// Theorems checked with this scenario as a single case.
    pub theorems: Vec<String>,
    pub identities: bool,
    /// Blockwise comparison with the factors; meaningful when both warpings equal one.
    pub degeneration: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { tensors: None, blocks: true, predicates: None, theorems: Vec::new(), identities: true, degeneration: false }
    }
}

/// A requested assertion; any failure makes the run exit with status 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    /// Max over samples of the homogeneity-rescaled norm is below `bound`.
    NormBelow { tensor: String, bound: f64 },
    NormAbove { tensor: String, bound: f64 },
    /// The predicate verdict equals `holds`.
    Predicate { name: String, holds: bool },
    /// The theorem check passes with this scenario as its only case.
    Theorem { theorem: String },
    /// The numerically determined proper flag equals `value`.
    Proper { value: bool },
}

/// A list of scenarios checked against one theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub schema_version: u32,
    /// Always `"family"`.
    pub kind: String,
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub theorem: String,
    /// Scenario paths relative to this file.
    pub cases: Vec<String>,
}

pub enum Input {
    Scenario(Box<Scenario>),
    Family(Family),
}

/// A validated scenario with every default resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: PathBuf,
    pub file: ScenarioFile,
    pub model: Model,
    pub tolerances: Tolerances,
    pub tensors: Vec<&'static str>,
    pub predicates: Vec<&'static str>,
    pub theorems: Vec<TheoremId>,
}

impl Scenario {
    pub fn douglas(&self) -> bool {
        self.file.jets.max_order == 6
    }

    pub fn oracle(&self) -> OracleConfig {
        self.file.oracle.config()
    }
}

#[derive(Debug, Clone)]
pub struct Family {
    pub path: PathBuf,
    pub file: FamilyFile,
    pub theorem: TheoremId,
    pub cases: Vec<Scenario>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub order: Option<usize>,
    pub tolerances: Vec<(String, f64)>,
}

fn read(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(path.display().to_string(), e))
}

/// Loads a scenario or a theorem family, distinguished by `"kind": "family"`.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Input, CliError> {
    let value = read(path)?;
    if value.get("kind").and_then(|k| k.as_str()) == Some("family") {
        return load_family(path, value, overrides).map(Input::Family);
    }
    load_scenario_value(path, value, overrides).map(|s| Input::Scenario(Box::new(s)))
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    load_scenario_value(path, read(path)?, overrides)
}

fn load_family(path: &Path, value: serde_json::Value, overrides: &Overrides) -> Result<Family, CliError> {
    let where_ = path.display().to_string();
    let file: FamilyFile = serde_json::from_value(value).map_err(|e| CliError::schema(&where_, e))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::schema(&where_, format!("unsupported schema_version {}", file.schema_version)));
    }
    let theorem = TheoremId::parse(&file.theorem).map_err(|e| CliError::schema(&where_, e))?;
    if file.cases.is_empty() {
        return Err(CliError::schema(&where_, "a family needs at least one case"));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut cases = Vec::with_capacity(file.cases.len());
    for case in &file.cases {
        let s = load_scenario(&dir.join(case), overrides)?;
        if !matches!(s.model, Model::Product(_)) {
            return Err(CliError::schema(&where_, format!("case {case} is not a two-factor product")));
        }
        cases.push(s);
    }
    Ok(Family { path: path.to_path_buf(), file, theorem, cases })
}

fn load_scenario_value(path: &Path, value: serde_json::Value, overrides: &Overrides) -> Result<Scenario, CliError> {
    let where_ = path.display().to_string();
    let mut file: ScenarioFile = serde_json::from_value(value).map_err(|e| CliError::schema(&where_, e))?;
    if let Some(seed) = overrides.seed {
        file.sampling.seed = seed;
    }
    if let Some(order) = overrides.order {
        file.jets.max_order = order;
    }
    for (name, v) in &overrides.tolerances {
        file.thresholds.insert(name.clone(), *v);
    }
    validate(&where_, file).map(|(file, model, tolerances, tensors, predicates, theorems)| Scenario {
        path: path.to_path_buf(),
        file,
        model,
        tolerances,
        tensors,
        predicates,
        theorems,
    })
}

type Validated = (ScenarioFile, Model, Tolerances, Vec<&'static str>, Vec<&'static str>, Vec<TheoremId>);

fn validate(where_: &str, mut file: ScenarioFile) -> Result<Validated, CliError> {
    let err = |m: String| CliError::schema(where_, m);
    if file.schema_version != SCHEMA_VERSION {
        return Err(err(format!("unsupported schema_version {}", file.schema_version)));
    }
    if file.id.is_empty() || !file.id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
        return Err(err(format!("id '{}' must be non-empty and use only [A-Za-z0-9_.-]", file.id)));
    }
    if !matches!(file.jets.max_order, 5 | 6) {
        return Err(err(format!("jets.max_order must be 5 or 6, got {}", file.jets.max_order)));
    }
    let s = &file.sampling;
    if s.count == 0 || s.fibers_per_point == 0 || s.norms.is_empty() || s.norms.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(err("sampling needs count > 0, fibers_per_point > 0 and positive finite norms".into()));
    }
    let o = &file.oracle;
    if [o.direct_step, o.outer_step, o.base_scale].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(err("oracle steps and base_scale must be positive".into()));
    }

    let factors = file
        .factors
        .iter()
        .enumerate()
        .map(|(i, f)| build_factor(f).map_err(|m| err(format!("factors[{i}]: {m}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let model = match (factors.len(), file.warpings.len()) {
        (1, 0) => Model::Single(factors.into_iter().next().expect("one factor")),
        (2, 2) => {
            let mut it = factors.into_iter();
            let (m1, m2) = (it.next().expect("first"), it.next().expect("second"));
            let f1 = build_warping(&file.warpings[0], &m1).map_err(|m| err(format!("warpings[0]: {m}")))?;
            let f2 = build_warping(&file.warpings[1], &m2).map_err(|m| err(format!("warpings[1]: {m}")))?;
            let dwp = DwpScenario::new(m1, m2, f1, f2).map_err(|e| err(e.to_string()))?;
            for factor in [Factor::First, Factor::Second] {
                dwp.warping_is_constant(factor).map_err(|e| err(format!("warping f{} cannot be evaluated on its chart: {e}", factor.digit())))?;
            }
            Model::Product(Box::new(dwp))
        }
        (1, _) => return Err(err("a single-factor scenario takes no warpings".into())),
        (2, _) => return Err(err("a product needs exactly two warpings".into())),
        (n, _) => return Err(err(format!("expected 1 or 2 factors, got {n}"))),
    };

    let mut tolerances = Tolerances::default();
    for (name, v) in &file.thresholds {
        if !(*v >= 0.0 && v.is_finite()) {
            return Err(err(format!("tolerance {name} must be a non-negative number")));
        }
        tolerances.set(name, *v).map_err(err)?;
    }

    let douglas = file.jets.max_order == 6;
    let tensors: Vec<&'static str> = match &file.outputs.tensors {
        None => TENSOR_NAMES.iter().copied().filter(|t| douglas || !DOUGLAS_TENSORS.contains(t)).collect(),
        Some(list) => {
            let mut out = Vec::new();
            for t in list {
                let name = TENSOR_NAMES.iter().copied().find(|n| n == t).ok_or_else(|| err(format!("unknown tensor '{t}'")))?;
                if !douglas && DOUGLAS_TENSORS.contains(&name) {
                    return Err(err(format!("tensor '{t}' needs jets.max_order 6")));
                }
                out.push(name);
            }
            out
        }
    };
    let predicates: Vec<&'static str> = match &file.outputs.predicates {
        None => PREDICATES.to_vec(),
        Some(list) => list
            .iter()
            .map(|p| PREDICATES.iter().copied().find(|n| n == p).ok_or_else(|| err(format!("unknown predicate '{p}'"))))
            .collect::<Result<_, _>>()?,
    };
    let theorems = file.outputs.theorems.iter().map(|t| TheoremId::parse(t).map_err(|e| err(e.to_string()))).collect::<Result<Vec<_>, _>>()?;
    if !theorems.is_empty() && !matches!(model, Model::Product(_)) {
        return Err(err("theorems need a two-factor product".into()));
    }
    for e in &file.expect {
        match e {
            Expectation::NormBelow { tensor, .. } | Expectation::NormAbove { tensor, .. } => {
                if !NORM_NAMES.contains(&tensor.as_str()) {
                    return Err(err(format!("expect: no norm named '{tensor}'")));
                }
                if !douglas && tensor == "douglas" {
                    return Err(err("expect: the douglas norm needs jets.max_order 6".into()));
                }
            }
            Expectation::Predicate { name, .. } => {
                if !PREDICATES.contains(&name.as_str()) {
                    return Err(err(format!("expect: unknown predicate '{name}'")));
                }
            }
            Expectation::Theorem { theorem } => {
                TheoremId::parse(theorem).map_err(|e| err(format!("expect: {e}")))?;
                if !matches!(model, Model::Product(_)) {
                    return Err(err("expect: theorems need a two-factor product".into()));
                }
            }
            Expectation::Proper { .. } => {
                if !matches!(model, Model::Product(_)) {
                    return Err(err("expect: proper applies to products only".into()));
                }
            }
        }
    }
    if file.outputs.predicates.is_none() {
        file.outputs.predicates = Some(predicates.iter().map(|p| p.to_string()).collect());
    }
    if file.outputs.tensors.is_none() {
        file.outputs.tensors = Some(tensors.iter().map(|t| t.to_string()).collect());
    }
    Ok((file, model, tolerances, tensors, predicates, theorems))
}

/// Norm names produced by classification.
pub const NORM_NAMES: [&str; 10] =
    ["cartan", "mean_cartan", "angular", "spray", "berwald", "mean_berwald", "douglas", "landsberg", "mean_landsberg", "dually_flat"];

fn chart(spec: &ChartSpec, dim: usize) -> Result<ChartBox, String> {
    if spec.lower.len() != dim || spec.upper.len() != dim {
        return Err(format!("chart bounds must have length {dim}"));
    }
    ChartBox::new(spec.lower.clone(), spec.upper.clone()).map_err(|e| e.to_string())
}

fn parse(text: &str, names: &[String]) -> Result<Expr, String> {
    Expr::parse(text, names).map_err(|e| format!("expression '{text}': {e}"))
}

fn build_factor(spec: &FactorSpec) -> Result<FactorMetric, String> {
    let n = spec.dim;
    let base = base_variable_names(n);
    let family = match &spec.family {
        FamilySpec::Euclidean {} => MetricFamily::Euclidean,
        FamilySpec::RiemannianDiag { coefficients } => {
            MetricFamily::RiemannianDiag { coefficients: coefficients.iter().map(|c| parse(c, &base)).collect::<Result<_, _>>()? }
        }
        FamilySpec::Randers { alpha, beta } => MetricFamily::Randers {
            alpha: alpha.iter().map(|c| parse(c, &base)).collect::<Result<_, _>>()?,
            beta: beta.iter().map(|c| parse(c, &base)).collect::<Result<_, _>>()?,
        },
        FamilySpec::MinkowskiQuartic { coefficients } => MetricFamily::MinkowskiQuartic { coefficients: coefficients.clone() },
        FamilySpec::CustomExpr { f_squared } => MetricFamily::Custom { f_squared: parse(f_squared, &tangent_variable_names(n))? },
    };
    let chart = chart(&spec.chart, n)?;
    FactorMetric::new(n, family, chart).map_err(|e| e.to_string())
}

fn build_warping(spec: &WarpingSpec, factor: &FactorMetric) -> Result<Warping, String> {
    use finsler_core::metric::FinslerMetric;
    let n = factor.dim();
    let expr = parse(&spec.expr, &base_variable_names(n))?;
    let positivity = match &spec.positivity {
        Some(c) => chart(c, n)?,
        None => factor.chart().clone(),
    };
    let w = Warping::new(expr, positivity).map_err(|e| e.to_string())?;
    for x in w.positivity_box().grid(PROPER_GRID_POINTS) {
        w.value(&x).map_err(|e| format!("{e} at {x:?}"))?;
    }
    Ok(w)
}
