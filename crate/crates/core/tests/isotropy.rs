use finsler_core::classify::{classify_bundles, fit_isotropy_coefficient, Claim, IsotropyMode, Thresholds};
use finsler_core::curvature::{compute_bundle, BundleOptions, CurvatureBundle, TangentSample};
use finsler_core::expr::Expr;
use finsler_core::metric::{base_variable_names, ChartBox, FactorMetric, FinslerMetric, MetricFamily};

fn e(t: &str) -> Expr {
    Expr::parse(t, &base_variable_names(2)).unwrap()
}

fn randers() -> FactorMetric {
    FactorMetric::new(2, MetricFamily::Randers { alpha: vec![e("1 + 0.2*x2^2"), e("1.5")], beta: vec![e("0.3*x1*x2"), e("0.2 + 0.1*x1")] }, ChartBox::cube(2, -1.0, 1.0))
        .unwrap()
}

fn quartic() -> FactorMetric {
    FactorMetric::new(2, MetricFamily::MinkowskiQuartic { coefficients: vec![vec![1.0, 0.6], vec![0.6, 1.0]] }, ChartBox::cube(2, -1.0, 1.0)).unwrap()
}

/// Four fibers of norms 0.5, 1, 2, 1 over each of three base points.
fn bundles<M: FinslerMetric>(m: &M) -> Vec<CurvatureBundle> {
    let mut out = Vec::new();
    for (g, x) in [[0.3, -0.4], [-0.6, 0.2], [0.1, 0.8]].into_iter().enumerate() {
        for (k, r) in [0.5, 1.0, 2.0, 1.0].into_iter().enumerate() {
            let t = 0.9 * k as f64 + 0.4 * g as f64;
            let s = TangentSample::new(x.to_vec(), vec![r * libm::cos(t), r * libm::sin(t)]).with_group(g);
            out.push(compute_bundle(m, &s, BundleOptions::default()).unwrap());
        }
    }
    out
}

#[test]
fn injected_mean_berwald_coefficient_is_recovered() {
    let th = Thresholds::default();
    for lambda in [-0.7, 0.25, 1.3] {
        let mut bs = bundles(&randers());
        for b in &mut bs {
            let n = b.dim() as f64;
            b.mean_berwald = b.angular.scaled(lambda * 0.5 * (n + 1.0) / libm::sqrt(b.f_squared));
        }
        let fit = fit_isotropy_coefficient(&bs, IsotropyMode::MeanBerwald, &th);
        assert_eq!(fit.skipped, 0);
        for s in &fit.samples {
            assert!((s.c.unwrap() - lambda).abs() < 1e-8);
        }
        assert!(fit.y_variance < 1e-16);
        assert!(fit.verdict);
    }
}

#[test]
fn injected_landsberg_coefficient_reports_both_signs() {
    let th = Thresholds::default();
    let c = 0.45;
    let mut bs = bundles(&randers());
    for b in &mut bs {
        let f = libm::sqrt(b.f_squared);
        b.landsberg = b.cartan.scaled(c * f);
        b.mean_landsberg = b.mean_cartan.scaled(c * f);
    }
    let fit = fit_isotropy_coefficient(&bs, IsotropyMode::Landsberg, &th);
    for s in &fit.samples {
        assert!((s.c.unwrap() - c).abs() < 1e-8);
        assert!((s.c_opposite_sign.unwrap() + c).abs() < 1e-8);
    }
    let fit = fit_isotropy_coefficient(&bs, IsotropyMode::MeanLandsberg, &th);
    for s in &fit.samples {
        assert!((s.c.unwrap() - c).abs() < 1e-8);
        assert!(s.c_opposite_sign.is_none());
    }
}

#[test]
fn berwald_metric_fits_zero() {
    let th = Thresholds::default();
    let bs = bundles(&quartic());
    for mode in [IsotropyMode::MeanBerwald, IsotropyMode::Landsberg, IsotropyMode::MeanLandsberg] {
        let fit = fit_isotropy_coefficient(&bs, mode, &th);
        for s in &fit.samples {
            if let Some(c) = s.c {
                assert!(c.abs() < 1e-10, "{mode:?} c = {c:e}");
            }
            assert!(s.residual < 1e-10, "{mode:?} residual = {:e}", s.residual);
        }
    }
    let report = classify_bundles("quartic", &bs, &th).unwrap();
    assert_eq!(report.claim("berwald"), Claim::Zero);
    assert_eq!(report.claim("riemannian"), Claim::Nonzero);
}

#[test]
fn randers_is_not_relatively_isotropic() {
    let th = Thresholds::default();
    let bs = bundles(&randers());
    let fit = fit_isotropy_coefficient(&bs, IsotropyMode::Landsberg, &th);
    assert!(fit.max_residual > 0.0);
    assert!(!fit.verdict);
    let report = classify_bundles("randers", &bs, &th).unwrap();
    assert_eq!(report.claim("riemannian"), Claim::Nonzero);
    assert!(!report.predicate("berwald").verdict);
}

#[test]
fn riemannian_skips_landsberg_fit() {
    let m = FactorMetric::new(2, MetricFamily::RiemannianDiag { coefficients: vec![e("1 + 0.3*x2^2"), e("exp(0.4*x1)")] }, ChartBox::cube(2, -1.0, 1.0))
        .unwrap();
    let bs = bundles(&m);
    let fit = fit_isotropy_coefficient(&bs, IsotropyMode::Landsberg, &Thresholds::default());
    assert_eq!(fit.skipped, bs.len());
    assert!(fit.samples.iter().all(|s| s.c.is_none()));
}
