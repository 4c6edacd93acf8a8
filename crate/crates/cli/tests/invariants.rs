//! Verdict-level invariants of the classifier over the bundled matrix.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use finsler_cli::commands;
use finsler_cli::scenario::{load_scenario, Overrides};
use serde_json::Value;

const MATRIX: [&str; 12] = [
    "euclidean2_const",
    "euclidean2_proper",
    "riemannian_euclidean_const",
    "riemannian_euclidean_proper",
    "randers_euclidean_const",
    "randers_euclidean_proper",
    "randers_randers_const",
    "randers_randers_proper",
    "minkowski2_const",
    "minkowski2_proper",
    "riemannian2_const",
    "riemannian2_proper",
];

fn matrix(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/matrix").join(format!("{name}.json"))
}

fn classify(path: &Path) -> Value {
    let s = load_scenario(path, &Overrides::default()).unwrap();
    serde_json::from_str(&commands::classify(&s).unwrap().json).unwrap()
}

/// Every predicate claim of the product and of both factors.
fn claims(report: &Value) -> BTreeMap<String, Value> {
    let r = &report["results"];
    let mut out = BTreeMap::new();
    for (scope, c) in [("product", &r["classification"]), ("factor1", &r["factors"]["factor1"]), ("factor2", &r["factors"]["factor2"])] {
        for (name, p) in c["predicates"].as_object().unwrap() {
            out.insert(format!("{scope}:{name}"), p["claim"].clone());
        }
    }
    out
}

#[test]
fn riemannian_verdict_implies_berwald_verdict() {
    for name in MATRIX {
        let r = classify(&matrix(name));
        let p = &r["results"]["classification"]["predicates"];
        if p["riemannian"]["verdict"] == true {
            assert_eq!(p["berwald"]["verdict"], true, "{name}");
        }
        for factor in ["factor1", "factor2"] {
            let f = &r["results"]["factors"][factor]["predicates"];
            if f["riemannian"]["verdict"] == true {
                assert_eq!(f["berwald"]["verdict"], true, "{name} {factor}");
            }
        }
    }
}

#[test]
fn constant_rescaling_of_a_warping_keeps_every_verdict() {
    let dir = std::env::temp_dir().join(format!("finsler-scale-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (name, slot, k) in [("randers_euclidean_proper", 0, 2.5), ("minkowski2_proper", 1, 0.4), ("riemannian2_proper", 0, 3.0)] {
        let base = classify(&matrix(name));
        let mut file: Value = serde_json::from_str(&std::fs::read_to_string(matrix(name)).unwrap()).unwrap();
        let expr = file["warpings"][slot]["expr"].as_str().unwrap().to_string();
        file["warpings"][slot]["expr"] = Value::String(format!("{k}*({expr})"));
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        let scaled = classify(&path);
        assert_eq!(claims(&base), claims(&scaled), "{name}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}
