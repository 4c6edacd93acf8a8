use finsler_core::classify::{classify, verify_theorem, CaseStatus, Claim, ClassifyError, TheoremCase, TheoremId, Thresholds};
use finsler_core::curvature::TangentSample;
use finsler_core::dwp::DwpScenario;
use finsler_core::expr::Expr;
use finsler_core::metric::{base_variable_names, ChartBox, FactorMetric, MetricFamily, Warping};

fn e(t: &str) -> Expr {
    Expr::parse(t, &base_variable_names(2)).unwrap()
}

fn warp(t: &str) -> Warping {
    Warping::new(e(t), ChartBox::cube(2, -1.0, 1.0)).unwrap()
}

fn randers() -> FactorMetric {
    // |b|_alpha = 0.5 at every point
    FactorMetric::new(2, MetricFamily::Randers { alpha: vec![e("1"), e("1")], beta: vec![e("0.3"), e("0.4")] }, ChartBox::cube(2, -1.0, 1.0)).unwrap()
}

fn quartic() -> FactorMetric {
    FactorMetric::new(2, MetricFamily::MinkowskiQuartic { coefficients: vec![vec![1.0, 0.6], vec![0.6, 1.0]] }, ChartBox::cube(2, -1.0, 1.0)).unwrap()
}

fn samples() -> Vec<TangentSample> {
    (0..6)
        .map(|k| {
            let t = 0.7 * k as f64;
            TangentSample::new(
                vec![0.6 * libm::sin(t), 0.4 * libm::cos(t), -0.5 * libm::sin(2.0 * t), 0.3],
                vec![libm::cos(t), 0.5 + 0.2 * libm::sin(t), -0.6 * libm::sin(t) + 0.2, 0.8],
            )
            .with_group(k / 2)
        })
        .collect()
}

fn case(label: &str, s: DwpScenario) -> TheoremCase {
    TheoremCase { label: label.into(), scenario: s, samples: samples() }
}

#[test]
fn flat_product_verdicts() {
    let s = DwpScenario::new(FactorMetric::euclidean(2), FactorMetric::euclidean(2), warp("1"), warp("1")).unwrap();
    let r = classify("flat", &s, &samples(), &Thresholds::default()).unwrap();
    for p in ["riemannian", "berwald", "douglas", "landsberg", "dually_flat"] {
        assert!(r.predicate(p).verdict, "{p}");
    }
}

#[test]
fn proper_randers_is_neither_riemannian_nor_douglas() {
    let s = DwpScenario::new(randers(), FactorMetric::euclidean(2), warp("exp(0.2*x1)"), warp("1 + 0.1*x1^2")).unwrap();
    let r = classify("randers", &s, &samples(), &Thresholds::default()).unwrap();
    assert_eq!(r.claim("riemannian"), Claim::Nonzero);
    assert!(!r.predicate("douglas").verdict);
    assert!(r.norm("douglas") > 1e-4);
    let t = verify_theorem(TheoremId::T5_2, &[case("randers", s)], &Thresholds::default()).unwrap();
    assert!(t.pass);
    assert_eq!(t.cases[0].status, CaseStatus::Confirmed);
}

#[test]
fn constant_warped_minkowski_product_is_dually_flat() {
    let s = DwpScenario::new(quartic(), quartic(), warp("2"), warp("2")).unwrap();
    let t = verify_theorem(TheoremId::T8_1, &[case("minkowski", s)], &Thresholds::default()).unwrap();
    assert!(t.pass);
    let s = DwpScenario::new(quartic(), quartic(), warp("exp(0.2*x1)"), warp("1")).unwrap();
    let t = verify_theorem(TheoremId::T8_1, &[case("warped", s)], &Thresholds::default()).unwrap();
    assert!(t.pass);
    assert!(t.cases[0].evidence["dually_flat"] > 1e-4);
}

#[test]
fn hypotheses_are_enforced() {
    let s = DwpScenario::new(randers(), FactorMetric::euclidean(2), warp("1"), warp("1")).unwrap();
    let err = verify_theorem(TheoremId::T4_2, &[case("product", s)], &Thresholds::default()).unwrap_err();
    assert!(matches!(err, ClassifyError::HypothesisViolated { theorem: "T4.2", .. }));
    assert!(err.to_string().contains("proper"));
    assert_eq!(verify_theorem(TheoremId::T6_2, &[], &Thresholds::default()).unwrap_err(), ClassifyError::EmptyFamily);
}
