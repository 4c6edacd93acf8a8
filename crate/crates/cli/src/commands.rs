//! The subcommands, as functions from validated input to a serialized report.

use std::collections::BTreeMap;

use finsler_core::classify::{
    classify_bundles, evaluate_case, tensor_norms, verify_theorem_on, CaseEvaluation, ClassificationReport, ClassifyError, TheoremCase,
    TheoremId, TheoremReport,
};
use finsler_core::closedform::{
    berwald_blocks, block_agreement, BERWALD_BLOCKS, DOUGLAS_BLOCKS, LANDSBERG_BLOCKS, MEAN_BERWALD_BLOCKS, MEAN_LANDSBERG_BLOCKS, degeneration_residuals, douglas_blocks, landsberg_blocks, mean_berwald_blocks, mean_berwald_dy_blocks,
    mean_landsberg_blocks, scaled_coupling_terms, Blocks, FactorPair,
};
use finsler_core::curvature::{compute_bundle, identity_residuals, BundleOptions, CurvatureBundle, CurvatureError, IdentityKind, TangentSample};
use finsler_core::oracle::{compare, oracle_bundle, FdConfig, OracleConfig, COMPARED};
use finsler_core::tensor::Tensor;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::model::Model;
use crate::report::*;
use crate::sampling::{self, SampleSet};
use crate::scenario::{Expectation, Family, FamilyFile, Input, Scenario, ScenarioFile};

/// A finished run: the JSON report, optional CSV tables and the overall verdict.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub id: String,
    pub json: String,
    /// `(table name, CSV text)`.
    pub csv: Vec<(&'static str, String)>,
    pub pass: bool,
}

fn evaluation(e: impl ToString) -> CliError {
    CliError::Evaluation(e.to_string())
}

fn classify_error(e: ClassifyError) -> CliError {
    match e {
        ClassifyError::HypothesisViolated { .. } | ClassifyError::EmptyFamily | ClassifyError::UnknownTheorem(_) => CliError::Usage(e.to_string()),
        other => evaluation(other),
    }
}

/// Named tensor of a bundle.
pub fn tensor<'a>(b: &'a CurvatureBundle, name: &str) -> Option<&'a Tensor> {
    match name {
        "g" => Some(&b.g),
        "g_inv" => Some(&b.g_inv),
        "y_lower" => Some(&b.y_lower),
        "cartan" => Some(&b.cartan),
        "mean_cartan" => Some(&b.mean_cartan),
        "angular" => Some(&b.angular),
        "spray" => Some(&b.spray),
        "berwald" => Some(&b.berwald),
        "mean_berwald" => Some(&b.mean_berwald),
        "mean_berwald_dy" => b.mean_berwald_dy.as_ref(),
        "douglas" => b.douglas.as_ref(),
        "landsberg" => Some(&b.landsberg),
        "mean_landsberg" => Some(&b.mean_landsberg),
        "dually_flat" => Some(&b.dually_flat),
        _ => None,
    }
}

pub fn draw_samples(s: &Scenario) -> Result<SampleSet, CliError> {
    sampling::draw(&s.model, s.model.chart(), &s.file.sampling)
}

fn options(s: &Scenario) -> BundleOptions {
    BundleOptions { douglas: s.douglas() }
}

fn csv_table<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv buffer")).expect("utf-8 csv")
}

fn max_into(acc: &mut BTreeMap<String, f64>, key: &str, v: f64) {
    let e = acc.entry(key.to_string()).or_insert(0.0);
    *e = e.max(v);
}

/// Closed-form block families with the labels each reports; the remaining patterns follow
/// from symmetry of the lower slots.
fn closed_form_families(pair: &FactorPair, douglas: bool) -> Vec<(&'static str, Blocks, &'static [&'static str])> {
    let mut out = vec![
        ("berwald", berwald_blocks(pair), &BERWALD_BLOCKS[..]),
        ("mean_berwald", mean_berwald_blocks(pair), &MEAN_BERWALD_BLOCKS[..]),
        ("landsberg", landsberg_blocks(pair), &LANDSBERG_BLOCKS[..]),
        ("mean_landsberg", mean_landsberg_blocks(pair), &MEAN_LANDSBERG_BLOCKS[..]),
    ];
    if douglas {
        // dE is fully symmetric, like the Landsberg lower slots
        out.push(("mean_berwald_dy", mean_berwald_dy_blocks(pair), &LANDSBERG_BLOCKS[..]));
        out.push(("douglas", douglas_blocks(pair), &DOUGLAS_BLOCKS[..]));
    }
    out
}

fn sample_record(s: &Scenario, index: usize, sample: &TangentSample) -> Result<(SampleRecord, CurvatureBundle), CliError> {
    let bundle = compute_bundle(&s.model, sample, options(s)).map_err(evaluation)?;
    let out = &s.file.outputs;
    let t = &s.tolerances;
    let tensors = s.tensors.iter().filter_map(|name| tensor(&bundle, name).map(|x| (name.to_string(), x.clone()))).collect();
    let identities = out.identities.then(|| {
        identity_residuals(&bundle)
            .into_iter()
            .map(|r| {
                let tolerance = match r.kind {
                    IdentityKind::Symmetry => t.identity_symmetry,
                    IdentityKind::Euler => t.identity_euler,
                };
                IdentityRecord { name: r.name, kind: r.kind, value: r.value, tolerance, holds: r.value <= tolerance }
            })
            .collect()
    });
    let (mut blocks, mut couplings, mut degeneration) = (None, None, None);
    if let Model::Product(dwp) = &s.model {
        let pair = FactorPair::new(dwp, sample).map_err(evaluation)?;
        couplings = Some(scaled_coupling_terms(&pair));
        if out.blocks {
            let diffs: BTreeMap<(String, String), f64> =
                block_agreement(&pair, &bundle).into_iter().map(|a| ((a.family.to_string(), a.block), a.diff)).collect();
            let mut fam = BTreeMap::new();
            for (family, closed, shown) in closed_form_families(&pair, s.douglas()) {
                let mut records = BTreeMap::new();
                for block in closed.values() {
                    let label = block.label();
                    if !shown.contains(&label.as_str()) {
                        continue;
                    }
                    let engine_diff = diffs[&(family.to_string(), label.clone())];
                    records.insert(label, BlockRecord { shape: block.shape.clone(), data: block.data.clone(), engine_diff });
                }
                fam.insert(family.to_string(), records);
            }
            blocks = Some(fam);
        }
        if out.degeneration {
            degeneration = Some(degeneration_residuals(dwp, sample).map_err(evaluation)?);
        }
    }
    let record = SampleRecord {
        point: SamplePoint { index, group: sample.group, x: sample.x.clone(), y: sample.y.clone() },
        f_squared: bundle.f_squared,
        norms: tensor_norms(&bundle),
        tensors,
        identities,
        blocks,
        couplings,
        degeneration,
    };
    Ok((record, bundle))
}

fn case_of(s: &Scenario, samples: &[TangentSample]) -> Option<TheoremCase> {
    s.model.product().map(|dwp| TheoremCase { label: s.file.id.clone(), scenario: dwp.clone(), samples: samples.to_vec() })
}

fn theorem_outcomes(ids: &[TheoremId], eval: &CaseEvaluation, s: &Scenario) -> Result<Vec<TheoremOutcome>, CliError> {
    ids.iter()
        .map(|id| match verify_theorem_on(*id, std::slice::from_ref(eval), &s.tolerances.thresholds) {
            Ok(r) => Ok(TheoremOutcome::Checked(r)),
            Err(e @ ClassifyError::HypothesisViolated { .. }) => Ok(TheoremOutcome::NotApplicable { theorem: id.as_str().into(), error: e.to_string() }),
            Err(e) => Err(evaluation(e)),
        })
        .collect()
}

fn theorem_assertion(outcome: &TheoremOutcome) -> Assertion {
    match outcome {
        TheoremOutcome::Checked(r) => Assertion::flag(format!("theorem:{}", r.theorem.as_str()), r.pass, r.grid.clone()),
        TheoremOutcome::NotApplicable { theorem, error } => Assertion::flag(format!("theorem:{theorem}"), false, error.clone()),
    }
}

/// Checks the scenario's `expect` list. `classification` and `case` are computed on demand.
fn expectations(
    s: &Scenario,
    bundles: &[CurvatureBundle],
    samples: &[TangentSample],
    mut classification: Option<ClassificationReport>,
    mut case: Option<CaseEvaluation>,
) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for e in &s.file.expect {
        let report = || classify_bundles(&s.file.id, bundles, &s.tolerances.thresholds).map_err(evaluation);
        match e {
            Expectation::NormBelow { tensor, bound } | Expectation::NormAbove { tensor, bound } => {
                if classification.is_none() {
                    classification = Some(report()?);
                }
                let v = classification.as_ref().expect("classified").norm(tensor);
                out.push(if matches!(e, Expectation::NormBelow { .. }) {
                    Assertion::below(format!("expect:norm_below:{tensor}"), v, *bound)
                } else {
                    Assertion::above(format!("expect:norm_above:{tensor}"), v, *bound)
                });
            }
            Expectation::Predicate { name, holds } => {
                if classification.is_none() {
                    classification = Some(report()?);
                }
                let p = classification.as_ref().expect("classified").predicate(name);
                let mut a = Assertion::flag(format!("expect:predicate:{name}"), p.verdict == *holds, format!("verdict {}, expected {holds}", p.verdict));
                a.value = Some(p.residual);
                a.bound = Some(p.threshold);
                out.push(a);
            }
            Expectation::Theorem { theorem } => {
                let id = TheoremId::parse(theorem).map_err(evaluation)?;
                if case.is_none() {
                    let c = case_of(s, samples).expect("validated as a product");
                    case = Some(evaluate_case(&c, &s.tolerances.thresholds).map_err(evaluation)?);
                }
                let outcome = theorem_outcomes(&[id], case.as_ref().expect("evaluated"), s)?;
                let mut a = theorem_assertion(&outcome[0]);
                a.name = format!("expect:{}", a.name);
                out.push(a);
            }
            Expectation::Proper { value } => {
                let proper = s.model.product().expect("validated as a product").is_proper().map_err(evaluation)?;
                out.push(Assertion::flag("expect:proper", proper == *value, format!("proper = {proper}")));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TensorRow<'a> {
    sample: usize,
    tensor: &'a str,
    index: String,
    value: f64,
}

fn tensor_rows(records: &[SampleRecord]) -> String {
    let mut rows = Vec::new();
    for r in records {
        for (name, t) in &r.tensors {
            let mut idx = vec![0usize; t.rank()];
            for (k, v) in t.data().iter().enumerate() {
                t.unflatten(k, &mut idx);
                let index = idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ");
                rows.push(TensorRow { sample: r.point.index, tensor: name, index, value: *v });
            }
        }
    }
    csv_table(&rows)
}

/// `compute`: tensors, identities, closed-form blocks and degeneration residuals per sample.
pub fn compute(s: &Scenario) -> Result<Outcome, CliError> {
    let set = draw_samples(s)?;
    let results: Vec<(SampleRecord, CurvatureBundle)> =
        set.samples.par_iter().enumerate().map(|(i, sample)| sample_record(s, i, sample)).collect::<Result<_, _>>()?;
    let (records, bundles): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let t = &s.tolerances;

    let mut summary = ComputeSummary {
        max_norms: BTreeMap::new(),
        max_identity: BTreeMap::new(),
        max_block_diff: BTreeMap::new(),
        max_couplings: BTreeMap::new(),
        degeneration: None,
    };
    let mut identity_ok = true;
    let mut degeneration = s.file.outputs.degeneration.then_some(DegenerationSummary { pure: 0.0, mixed: 0.0 });
    for r in &records {
        for (k, v) in &r.norms {
            max_into(&mut summary.max_norms, k, *v);
        }
        for id in r.identities.iter().flatten() {
            max_into(&mut summary.max_identity, id.name, id.value);
            identity_ok &= id.holds;
        }
        for (family, blocks) in r.blocks.iter().flatten() {
            for b in blocks.values() {
                max_into(&mut summary.max_block_diff, family, b.engine_diff);
            }
        }
        for (k, v) in r.couplings.iter().flatten() {
            max_into(&mut summary.max_couplings, k, *v);
        }
        if let (Some(d), Some(res)) = (degeneration.as_mut(), &r.degeneration) {
            for x in res {
                let slot = if x.mixed { &mut d.mixed } else { &mut d.pure };
                *slot = slot.max(x.value);
            }
        }
    }
    summary.degeneration = degeneration;

    let mut assertions = Vec::new();
    if s.file.outputs.identities {
        let detail = format!("{} samples", records.len());
        assertions.push(Assertion::flag("identities", identity_ok, detail));
    }
    for (family, diff) in &summary.max_block_diff {
        assertions.push(Assertion::below(format!("blocks:{family}"), *diff, t.block_for(family)));
    }
    if let Some(d) = degeneration {
        assertions.push(Assertion::below("degeneration:pure", d.pure, t.degeneration_pure));
        assertions.push(Assertion::below("degeneration:mixed", d.mixed, t.degeneration_mixed));
    }
    assertions.extend(expectations(s, &bundles, &set.samples, None, None)?);

    let csv = vec![("tensors", tensor_rows(&records))];
    let results = ComputeResults { sampling: set.summary(s.file.sampling.count), samples: records, summary };
    finish("compute", s.file.id.clone(), Config::Scenario(Box::new(ResolvedConfig::of(s))), results, assertions, csv)
}

fn finish<R: Serialize>(
    command: &'static str,
    id: String,
    config: Config,
    results: R,
    assertions: Vec<Assertion>,
    csv: Vec<(&'static str, String)>,
) -> Result<Outcome, CliError> {
    let report = Report::new(command, id.clone(), config, results, assertions);
    Ok(Outcome { command, id, json: report.to_json(), csv, pass: report.pass })
}

#[derive(Serialize)]
struct PredicateRow<'a> {
    scope: &'a str,
    predicate: &'a str,
    residual: f64,
    threshold: f64,
    verdict: bool,
    claim: String,
}

fn predicate_rows<'a>(rows: &mut Vec<PredicateRow<'a>>, scope: &'static str, r: &'a ClassificationReport) {
    for (name, p) in &r.predicates {
        rows.push(PredicateRow { scope, predicate: name.as_str(), residual: p.residual, threshold: p.threshold, verdict: p.verdict, claim: format!("{:?}", p.claim) });
    }
}

fn keep_predicates(r: &mut ClassificationReport, keep: &[&str]) {
    r.predicates.retain(|k, _| keep.contains(&k.as_str()));
}

/// `classify`: predicate verdicts and isotropy fits; for products also the factor reports,
/// coupling norms and any theorems listed in `outputs.theorems`.
pub fn classify(s: &Scenario) -> Result<Outcome, CliError> {
    let set = draw_samples(s)?;
    let th = &s.tolerances.thresholds;
    let bundles: Vec<CurvatureBundle> =
        set.samples.par_iter().map(|x| compute_bundle(&s.model, x, options(s))).collect::<Result<_, CurvatureError>>().map_err(evaluation)?;
    let mut classification = classify_bundles(&s.file.id, &bundles, th).map_err(evaluation)?;
    let (mut factors, mut theorems, mut case) = (None, Vec::new(), None);
    if let Some(c) = case_of(s, &set.samples) {
        let e = evaluate_case(&c, th).map_err(evaluation)?;
        theorems = theorem_outcomes(&s.theorems, &e, s)?;
        let (mut f1, mut f2) = (e.factor1.clone(), e.factor2.clone());
        keep_predicates(&mut f1, &s.predicates);
        keep_predicates(&mut f2, &s.predicates);
        factors = Some(FactorReports {
            proper: e.proper,
            f1_constant: e.f1_constant,
            f2_constant: e.f2_constant,
            factor1: f1,
            factor2: f2,
            couplings: e.couplings.clone(),
        });
        case = Some(e);
    }
    let mut assertions: Vec<Assertion> = theorems.iter().map(theorem_assertion).collect();
    assertions.extend(expectations(s, &bundles, &set.samples, Some(classification.clone()), case)?);
    keep_predicates(&mut classification, &s.predicates);

    let mut rows = Vec::new();
    predicate_rows(&mut rows, "dwp", &classification);
    if let Some(f) = &factors {
        predicate_rows(&mut rows, "factor1", &f.factor1);
        predicate_rows(&mut rows, "factor2", &f.factor2);
    }
    let csv = vec![("predicates", csv_table(&rows))];
    let results =
        ClassifyResults { sampling: set.summary(s.file.sampling.count), samples: points(&set.samples), classification, factors, theorems };
    finish("classify", s.file.id.clone(), Config::Scenario(Box::new(ResolvedConfig::of(s))), results, assertions, csv)
}

fn case_record(s: &Scenario, set: &SampleSet, e: &CaseEvaluation) -> CaseRecord {
    CaseRecord {
        label: e.label.clone(),
        path: s.path.display().to_string(),
        sampling: set.summary(s.file.sampling.count),
        proper: e.proper,
        f1_constant: e.f1_constant,
        f2_constant: e.f2_constant,
        norms: e.dwp.norms.clone(),
        factor1_norms: e.factor1.norms.clone(),
        factor2_norms: e.factor2.norms.clone(),
        couplings: e.couplings.clone(),
    }
}

fn evaluate_scenario_case(s: &Scenario) -> Result<(SampleSet, CaseEvaluation), CliError> {
    let set = draw_samples(s)?;
    let case = case_of(s, &set.samples).ok_or_else(|| CliError::Usage(format!("{}: theorems need a two-factor product", s.file.id)))?;
    let e = evaluate_case(&case, &s.tolerances.thresholds).map_err(evaluation)?;
    Ok((set, e))
}

#[derive(Serialize)]
struct CaseRow<'a> {
    theorem: &'a str,
    case: &'a str,
    samples: usize,
    status: String,
    lhs: String,
    rhs: String,
}

/// `verify-theorem`: a theorem family, or a single scenario checked against `extra` plus its
/// `outputs.theorems`. A case outside a theorem's hypothesis is a usage error.
pub fn verify_theorem(input: &Input, extra: &[TheoremId]) -> Result<Outcome, CliError> {
    let (id, config, cases, ids): (String, Config, Vec<&Scenario>, Vec<TheoremId>) = match input {
        Input::Family(Family { path, file, theorem, cases }) => {
            let mut ids = vec![*theorem];
            ids.extend(extra.iter().filter(|t| *t != theorem));
            let config = FamilyConfig { path: path.display().to_string(), family: file.clone(), cases: cases.iter().map(ResolvedConfig::of).collect() };
            (file.id.clone(), Config::Family(config), cases.iter().collect(), ids)
        }
        Input::Scenario(s) => {
            let mut ids = s.theorems.clone();
            ids.extend(extra.iter().filter(|t| !s.theorems.contains(t)));
            if ids.is_empty() {
                return Err(CliError::Usage("no theorem requested: list one in outputs.theorems or pass --theorem".into()));
            }
            (s.file.id.clone(), Config::Scenario(Box::new(ResolvedConfig::of(s))), vec![s.as_ref()], ids)
        }
    };
    let th = cases[0].tolerances.thresholds;
    if let Some(other) = cases.iter().find(|c| c.tolerances.thresholds != th) {
        return Err(CliError::Usage(format!("case {} resolves different classification thresholds than {}", other.file.id, cases[0].file.id)));
    }
    let evaluated: Vec<(SampleSet, CaseEvaluation)> = cases.par_iter().map(|s| evaluate_scenario_case(s)).collect::<Result<_, _>>()?;
    let evals: Vec<CaseEvaluation> = evaluated.iter().map(|(_, e)| e.clone()).collect();
    let reports: Vec<TheoremReport> = ids.iter().map(|t| verify_theorem_on(*t, &evals, &th)).collect::<Result<_, _>>().map_err(classify_error)?;
    let assertions = reports.iter().map(|r| theorem_assertion(&TheoremOutcome::Checked(r.clone()))).collect();
    let mut rows = Vec::new();
    for r in &reports {
        for c in &r.cases {
            rows.push(CaseRow {
                theorem: r.theorem.as_str(),
                case: &c.label,
                samples: c.samples,
                status: format!("{:?}", c.status),
                lhs: format!("{:?}", c.lhs),
                rhs: format!("{:?}", c.rhs),
            });
        }
    }
    let csv = vec![("cases", csv_table(&rows))];
    let records = cases.iter().zip(&evaluated).map(|(s, (set, e))| case_record(s, set, e)).collect();
    finish("verify-theorem", id, config, TheoremResults { theorems: reports, cases: records }, assertions, csv)
}

fn oracle_names(s: &Scenario) -> Vec<&'static str> {
    COMPARED.iter().map(|(n, _)| *n).filter(|n| s.tensors.contains(n)).collect()
}

fn deviations(s: &Scenario, sample: &TangentSample, cfg: OracleConfig, names: &[&str]) -> Result<BTreeMap<String, f64>, CliError> {
    let with_douglas = s.douglas() && names.iter().any(|n| matches!(*n, "douglas" | "mean_berwald_dy"));
    let jet = compute_bundle(&s.model, sample, BundleOptions { douglas: with_douglas }).map_err(evaluation)?;
    let fd = oracle_bundle(&s.model, sample, cfg, with_douglas).map_err(evaluation)?;
    Ok(compare(&jet, &fd).into_iter().filter(|(n, _)| names.contains(n)).map(|(n, d)| (n.to_string(), d)).collect())
}

/// Samples used by the step sweep.
pub const SWEEP_SAMPLES: usize = 3;
/// Rows of the plain central-difference sweep.
pub const SWEEP_ROWS: usize = 5;

fn sweep_row(s: &Scenario, samples: &[TangentSample], cfg: OracleConfig, names: &[&str], prev: Option<&SweepRow>) -> Result<SweepRow, CliError> {
    let per: Vec<BTreeMap<String, f64>> = samples.par_iter().map(|x| deviations(s, x, cfg, names)).collect::<Result<_, _>>()?;
    let mut errors = BTreeMap::new();
    for d in &per {
        for (k, v) in d {
            max_into(&mut errors, k, *v);
        }
    }
    let mut observed_order = BTreeMap::new();
    if let Some(p) = prev {
        for (k, v) in &errors {
            let order = (p.errors[k] / v).log2();
            if order.is_finite() {
                observed_order.insert(k.clone(), order);
            }
        }
    }
    Ok(SweepRow { direct_step: cfg.direct.step, outer_step: cfg.outer.step, halvings: cfg.direct.halvings, errors, observed_order })
}

fn sweep(s: &Scenario, samples: &[TangentSample], names: &[&str]) -> Result<Sweep, CliError> {
    let base = s.oracle();
    let samples = &samples[..samples.len().min(SWEEP_SAMPLES)];
    let mut central: Vec<SweepRow> = Vec::new();
    for j in 0..SWEEP_ROWS {
        let h = 0.5f64.powi(j as i32);
        let cfg = OracleConfig { direct: FdConfig::new(base.direct.step * h, 0), outer: FdConfig::new(base.outer.step * h, 0), base_scale: base.base_scale };
        let row = sweep_row(s, samples, cfg, names, central.last())?;
        central.push(row);
    }
    let mut richardson: Vec<SweepRow> = Vec::new();
    for level in 0..=base.direct.halvings.max(base.outer.halvings) {
        let cfg = OracleConfig {
            direct: FdConfig::new(base.direct.step, level.min(base.direct.halvings)),
            outer: FdConfig::new(base.outer.step, level.min(base.outer.halvings)),
            base_scale: base.base_scale,
        };
        let mut row = sweep_row(s, samples, cfg, names, None)?;
        row.halvings = level;
        richardson.push(row);
    }
    Ok(Sweep { samples: samples.len(), central, richardson })
}

#[derive(Serialize)]
struct DeviationRow<'a> {
    sample: usize,
    tensor: &'a str,
    deviation: f64,
    tolerance: f64,
}

/// `oracle-check`: relative deviation of each requested tensor from its finite-difference
/// reconstruction, optionally with the step-size convergence table.
pub fn oracle_check(s: &Scenario, with_sweep: bool) -> Result<Outcome, CliError> {
    let set = draw_samples(s)?;
    let names = oracle_names(s);
    let cfg = s.oracle();
    let per: Vec<BTreeMap<String, f64>> = set.samples.par_iter().map(|x| deviations(s, x, cfg, &names)).collect::<Result<_, _>>()?;
    let mut max_deviation = BTreeMap::new();
    for d in &per {
        for (k, v) in d {
            max_into(&mut max_deviation, k, *v);
        }
    }
    let tolerance: BTreeMap<String, f64> = max_deviation.keys().map(|k| (k.clone(), s.tolerances.oracle_for(k))).collect();
    let assertions = max_deviation.iter().map(|(k, v)| Assertion::below(format!("oracle:{k}"), *v, tolerance[k])).collect();
    let sweep = if with_sweep { Some(sweep(s, &set.samples, &names)?) } else { None };
    let mut rows = Vec::new();
    for (i, d) in per.iter().enumerate() {
        for (k, v) in d {
            rows.push(DeviationRow { sample: i, tensor: k, deviation: *v, tolerance: tolerance[k] });
        }
    }
    let csv = vec![("deviations", csv_table(&rows))];
    let deviations = per.into_iter().enumerate().map(|(index, deviations)| OracleSample { index, deviations }).collect();
    let results = OracleResults {
        sampling: set.summary(s.file.sampling.count),
        samples: points(&set.samples),
        deviations,
        max_deviation,
        tolerance,
        sweep,
    };
    finish("oracle-check", s.file.id.clone(), Config::Scenario(Box::new(ResolvedConfig::of(s))), results, assertions, csv)
}

/// JSON schema of scenario files, or of theorem-family files.
pub fn schema(family: bool) -> String {
    let schema = if family { schemars::schema_for!(FamilyFile) } else { schemars::schema_for!(ScenarioFile) };
    let mut s = serde_json::to_string_pretty(&schema).expect("schema serializes");
    s.push('\n');
    s
}
