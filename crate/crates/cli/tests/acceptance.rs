//! Acceptance run over the bundled scenarios: one PASS/FAIL line per criterion, non-zero exit
//! status if any criterion fails. Bounds are pinned here rather than read from the tool.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use finsler_cli::commands;
use finsler_cli::scenario::{load, load_scenario, Input, Overrides, Scenario};
use finsler_core::classify::{fit_isotropy_coefficient, IsotropyMode, Thresholds};
use finsler_core::curvature::{compute_bundle, BundleOptions, CurvatureBundle, EULER_TOLERANCE, SYMMETRY_TOLERANCE};
use serde_json::Value;

const ORACLE_REL: f64 = 1e-4;
const ORACLE_REL_DOUGLAS: f64 = 1e-3;
const ORACLE_BUDGET_SECS: f64 = 300.0;
const BLOCK_ABS: f64 = 1e-7;
const BLOCK_ABS_DOUGLAS: f64 = 1e-6;
const MIN_BLOCK_SAMPLES: u64 = 5;
const IDENTITY_SAMPLES: usize = 100;
const DEGENERATION_PURE: f64 = 1e-10;
const DEGENERATION_MIXED: f64 = 1e-9;
const FIT_RECOVERY: f64 = 1e-8;
const BERWALD_FIT_RESIDUAL: f64 = 1e-10;
const DOUGLAS_BLOCKS_PER_SAMPLE: usize = 8;

const MATRIX: [&str; 6] = ["euclidean2", "riemannian_euclidean", "randers_euclidean", "randers_randers", "minkowski2", "riemannian2"];
const FAMILIES: [&str; 6] = ["t5_2", "t6_2", "t8_1", "t3_2", "t4_2", "t7_2"];

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn matrix_paths() -> Vec<PathBuf> {
    MATRIX
        .iter()
        .flat_map(|m| ["const", "proper"].map(|v| scenarios_dir().join("matrix").join(format!("{m}_{v}.json"))))
        .collect()
}

fn scenario(path: &Path) -> Result<Scenario, String> {
    load_scenario(path, &Overrides::default()).map_err(|e| format!("{}: {e}", path.display()))
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("report is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

/// Worst `value / bound` so failures report how far off they are.
struct Worst {
    ratio: f64,
    what: String,
}

impl Worst {
    fn new() -> Self {
        Self { ratio: 0.0, what: String::from("nothing checked") }
    }

    fn see(&mut self, value: f64, bound: f64, what: impl FnOnce() -> String) {
        let r = if value.is_nan() { f64::INFINITY } else { value / bound };
        if r >= self.ratio {
            self.ratio = r;
            self.what = format!("{} = {value:.2e} (bound {bound:.0e})", what());
        }
    }

    fn ok(&self) -> bool {
        self.ratio <= 1.0
    }
}

fn oracle_matrix() -> Result<(bool, String), String> {
    let start = Instant::now();
    let mut worst = Worst::new();
    let mut samples = 0;
    for path in matrix_paths() {
        let s = scenario(&path)?;
        let out = commands::oracle_check(&s, false).map_err(|e| e.to_string())?;
        let r = json(&out.json);
        samples += r["results"]["sampling"]["admissible"].as_u64().unwrap_or(0);
        for (name, v) in r["results"]["max_deviation"].as_object().into_iter().flatten() {
            let bound = if name == "douglas" || name == "mean_berwald_dy" { ORACLE_REL_DOUGLAS } else { ORACLE_REL };
            worst.see(num(v), bound, || format!("{}:{name}", s.file.id));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst.ok() && secs < ORACLE_BUDGET_SECS && samples == 120;
    Ok((pass, format!("12 scenarios, {samples} samples, {secs:.0} s; worst {}", worst.what)))
}

fn blocks_and_degeneration() -> Result<[(bool, String); 2], String> {
    let mut blocks = Worst::new();
    let mut degeneration = Worst::new();
    let mut min_samples = u64::MAX;
    let mut douglas_counts_ok = true;
    let mut const_cases = 0;
    for path in matrix_paths() {
        let mut s = scenario(&path)?;
        s.file.outputs.blocks = true;
        let is_const = s.file.id.ends_with("_const");
        s.file.outputs.degeneration = is_const;
        let r = json(&commands::compute(&s).map_err(|e| e.to_string())?.json);
        let res = &r["results"];
        min_samples = min_samples.min(res["sampling"]["admissible"].as_u64().unwrap_or(0));
        let diffs = res["summary"]["max_block_diff"].as_object().cloned().unwrap_or_default();
        for family in ["berwald", "mean_berwald", "landsberg", "mean_landsberg", "mean_berwald_dy", "douglas"] {
            let bound = if family == "douglas" || family == "mean_berwald_dy" { BLOCK_ABS_DOUGLAS } else { BLOCK_ABS };
            let v = diffs.get(family).map(num).unwrap_or(f64::NAN);
            blocks.see(v, bound, || format!("{}:{family}", s.file.id));
        }
        for sample in res["samples"].as_array().into_iter().flatten() {
            douglas_counts_ok &= sample["blocks"]["douglas"].as_object().map(|m| m.len()) == Some(DOUGLAS_BLOCKS_PER_SAMPLE);
        }
        if is_const {
            const_cases += 1;
            let d = &res["summary"]["degeneration"];
            degeneration.see(num(&d["pure"]), DEGENERATION_PURE, || format!("{}:pure", s.file.id));
            degeneration.see(num(&d["mixed"]), DEGENERATION_MIXED, || format!("{}:mixed", s.file.id));
        }
    }
    let b = (
        blocks.ok() && min_samples >= MIN_BLOCK_SAMPLES && douglas_counts_ok,
        format!("12 scenarios, >= {min_samples} samples each, 8 Douglas blocks per sample: {douglas_counts_ok}; worst {}", blocks.what),
    );
    let d = (degeneration.ok() && const_cases == 6, format!("{const_cases} constant-warping scenarios; worst {}", degeneration.what));
    Ok([b, d])
}

fn identities() -> Result<(bool, String), String> {
    let mut worst = Worst::new();
    let mut all_hold = true;
    let mut min_samples = usize::MAX;
    for path in matrix_paths() {
        let mut s = scenario(&path)?;
        s.file.sampling.count = IDENTITY_SAMPLES;
        s.file.outputs.blocks = false;
        s.file.outputs.identities = true;
        let r = json(&commands::compute(&s).map_err(|e| e.to_string())?.json);
        let samples = r["results"]["samples"].as_array().cloned().unwrap_or_default();
        min_samples = min_samples.min(samples.len());
        for sample in &samples {
            for id in sample["identities"].as_array().into_iter().flatten() {
                let bound = if id["kind"] == "symmetry" { SYMMETRY_TOLERANCE } else { EULER_TOLERANCE };
                all_hold &= id["holds"] == true;
                worst.see(num(&id["value"]), bound, || format!("{}:{}", s.file.id, id["name"].as_str().unwrap_or("?")));
            }
        }
    }
    let pass = worst.ok() && all_hold && min_samples == IDENTITY_SAMPLES;
    Ok((pass, format!("12 scenarios x {min_samples} samples; worst {}", worst.what)))
}

fn theorems() -> Result<(bool, String), String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for family in FAMILIES {
        let path = scenarios_dir().join("theorems").join(format!("{family}.family.json"));
        let input = load(&path, &Overrides::default()).map_err(|e| format!("{family}: {e}"))?;
        if !matches!(input, Input::Family(_)) {
            return Err(format!("{family} is not a family file"));
        }
        let r = json(&commands::verify_theorem(&input, &[]).map_err(|e| format!("{family}: {e}"))?.json);
        for t in r["results"]["theorems"].as_array().into_iter().flatten() {
            let cases = t["cases"].as_array().cloned().unwrap_or_default();
            let count = |status: &str| cases.iter().filter(|c| c["status"] == status).count();
            let ok = t["pass"] == true && count("contradiction") == 0 && count("confirmed") > 0;
            pass &= ok;
            parts.push(format!(
                "{} {} ({} confirmed, {} vacuous, {} undecided)",
                t["theorem"].as_str().unwrap_or("?"),
                if ok { "ok" } else { "FAILED" },
                count("confirmed"),
                count("vacuous"),
                count("undecided")
            ));
        }
    }
    Ok((pass && parts.len() == FAMILIES.len(), parts.join("; ")))
}

fn bundles_of(name: &str) -> Result<Vec<CurvatureBundle>, String> {
    let s = scenario(&scenarios_dir().join("examples").join(format!("{name}.json")))?;
    let set = commands::draw_samples(&s).map_err(|e| e.to_string())?;
    set.samples.iter().map(|x| compute_bundle(&s.model, x, BundleOptions::default()).map_err(|e| e.to_string())).collect()
}

fn isotropy() -> Result<(bool, String), String> {
    let th = Thresholds::default();
    let mut recovery = Worst::new();
    for c in [-0.7, 0.25, 1.3] {
        let mut bs = bundles_of("randers_single")?;
        for b in &mut bs {
            let f = b.f_squared.sqrt();
            let n = b.dim() as f64;
            b.mean_berwald = b.angular.scaled(c * 0.5 * (n + 1.0) / f);
            b.landsberg = b.cartan.scaled(c * f);
            b.mean_landsberg = b.mean_cartan.scaled(c * f);
        }
        for mode in [IsotropyMode::MeanBerwald, IsotropyMode::Landsberg, IsotropyMode::MeanLandsberg] {
            let fit = fit_isotropy_coefficient(&bs, mode, &th);
            if fit.samples.iter().any(|s| s.c.is_none()) || !fit.verdict {
                recovery.see(f64::INFINITY, FIT_RECOVERY, || format!("{mode:?} c={c}: no fit"));
            }
            for s in &fit.samples {
                recovery.see((s.c.unwrap_or(f64::NAN) - c).abs(), FIT_RECOVERY, || format!("{mode:?} c={c}"));
            }
        }
    }

    let mut berwald = Worst::new();
    let bs = bundles_of("quartic_single")?;
    for mode in [IsotropyMode::MeanBerwald, IsotropyMode::Landsberg, IsotropyMode::MeanLandsberg] {
        let fit = fit_isotropy_coefficient(&bs, mode, &th);
        for s in &fit.samples {
            berwald.see(s.residual, BERWALD_FIT_RESIDUAL, || format!("{mode:?} residual"));
            if let Some(c) = s.c {
                berwald.see(c.abs(), BERWALD_FIT_RESIDUAL, || format!("{mode:?} |c|"));
            }
        }
    }

    // both sign conventions must reach the classify report
    let s = scenario(&scenarios_dir().join("examples").join("randers_single.json"))?;
    let r = json(&commands::classify(&s).map_err(|e| e.to_string())?.json);
    let fits = r["results"]["classification"]["fits"]["landsberg"]["samples"].as_array().cloned().unwrap_or_default();
    let both_signs = !fits.is_empty()
        && fits.iter().all(|f| match (f["c"].as_f64(), f["c_opposite_sign"].as_f64()) {
            (Some(a), Some(b)) => a == -b,
            _ => false,
        });

    let pass = recovery.ok() && berwald.ok() && both_signs;
    Ok((pass, format!("injected c worst {}; Berwald worst {}; both Landsberg signs reported: {both_signs}", recovery.what, berwald.what)))
}

fn determinism() -> Result<(bool, String), String> {
    let bin = env!("CARGO_BIN_EXE_finsler");
    let root = std::env::temp_dir().join(format!("finsler-acceptance-{}", std::process::id()));
    let runs: [(&str, PathBuf); 3] = [
        ("compute", scenarios_dir().join("examples/douglas_blocks.json")),
        ("classify", scenarios_dir().join("matrix/randers_randers_proper.json")),
        ("verify-theorem", scenarios_dir().join("theorems/t8_1.family.json")),
    ];
    let mut compared = 0;
    let mut identical = true;
    for (command, path) in &runs {
        let mut bytes = Vec::new();
        for round in 0..2 {
            let dir = root.join(format!("{command}-{round}"));
            let status = Command::new(bin)
                .args([command, "--scenario"])
                .arg(path)
                .arg("--out")
                .arg(&dir)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{command} exited with {}", status.status));
            }
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.filter_map(|e| e.ok().map(|e| e.path())).collect();
            files.sort();
            bytes.push(files.iter().map(|f| std::fs::read(f).unwrap_or_default()).collect::<Vec<_>>());
        }
        compared += bytes[0].len();
        identical &= !bytes[0].is_empty() && bytes[0] == bytes[1];
    }
    let _ = std::fs::remove_dir_all(&root);
    Ok((identical, format!("{compared} report files from 3 commands, byte-identical across two runs: {identical}")))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, result: Result<(bool, String), String>| {
        let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= pass;
        println!("criterion {n} {name}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report(1, "jet vs oracle", oracle_matrix());
    match blocks_and_degeneration() {
        Ok([b, d]) => {
            report(2, "closed-form blocks", Ok(b));
            report(3, "identities", identities());
            report(4, "theorem harness", theorems());
            report(5, "degeneration", Ok(d));
        }
        Err(e) => {
            report(2, "closed-form blocks", Err(e.clone()));
            report(3, "identities", identities());
            report(4, "theorem harness", theorems());
            report(5, "degeneration", Err(e));
        }
    }
    report(6, "isotropy fitting", isotropy());
    report(7, "determinism", determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
