//! Factor Finsler metrics and warping functions.
//!
//! Every metric exposes `F^2(x, y)` generically over [`Scalar`], so the same code yields values
//! (for `f64`) or complete Taylor expansions (for [`Jet`]).

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::jet::{Jet, JetError, JetSpace};
use crate::linalg;
use crate::scalar::Scalar;

/// Randers samples with `|b|_alpha` at or above this bound are treated as inadmissible.
pub const RANDERS_NORM_LIMIT: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("metric dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("{family} expects {expected} coefficient expressions, got {got}")]
    Coefficients { family: &'static str, expected: usize, got: usize },
    #[error("fiber vector is zero; F is not smooth at the zero section")]
    ZeroFiber,
    #[error("coordinate arrays have length {got}, expected {expected}")]
    Arity { expected: usize, got: usize },
    #[error("warping function is not positive at the sample (value {0})")]
    NonPositiveWarping(f64),
    #[error("minkowski quartic coefficients fail strong convexity (smallest eigenvalue {0:e})")]
    NotConvex(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MetricError> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(MetricError::Invalid(format!("invalid chart box {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lower: alloc::vec![lo; dim], upper: alloc::vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Deterministic probe grid with `per_axis` points on each axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                (0..n)
                    .map(|axis| {
                        let step = k % per_axis;
                        k /= per_axis;
                        let t = step as f64 / (per_axis - 1) as f64;
                        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
                    })
                    .collect()
            })
            .collect()
    }
}

/// Anything that provides `F^2` on a coordinate chart.
pub trait FinslerMetric {
    fn dim(&self) -> usize;

    fn f_squared<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, MetricError>;

    /// Pointwise regularity predicate (chart membership plus family-specific conditions).
    fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool;

    /// True if `F^2` is quadratic in the fiber for every base point by construction.
    fn is_quadratic(&self) -> bool {
        false
    }

    /// Length scale for fiber finite-difference steps at `(x, y)`: roughly the distance from `y`
    /// to the set where `F^2` stops being smooth. Defaults to `|y|`.
    fn fiber_step_scale(&self, _x: &[f64], y: &[f64]) -> f64 {
        libm::sqrt(y.iter().map(|v| v * v).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricFamily {
    Euclidean,
    /// `F^2 = sum_i a_i(x) (y^i)^2`.
    RiemannianDiag { coefficients: Vec<Expr> },
    /// `F = sqrt(sum_i a_i(x) (y^i)^2) + sum_i b_i(x) y^i`.
    Randers { alpha: Vec<Expr>, beta: Vec<Expr> },
    /// `F^2 = sqrt(sum_ij c_ij (y^i)^2 (y^j)^2)` with a constant symmetric `c`.
    MinkowskiQuartic { coefficients: Vec<Vec<f64>> },
    /// `F^2` given directly as an expression in `x1..xn, y1..yn`.
    Custom { f_squared: Expr },
}

impl MetricFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::RiemannianDiag { .. } => "riemannian_diag",
            Self::Randers { .. } => "randers",
            Self::MinkowskiQuartic { .. } => "minkowski_quartic",
            Self::Custom { .. } => "custom_expr",
        }
    }
}

/// Names `x1..xn` used for base coordinates in coefficient expressions.
pub fn base_variable_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// Names `x1..xn, y1..yn` used by custom `F^2` expressions.
pub fn tangent_variable_names(dim: usize) -> Vec<String> {
    let mut names = base_variable_names(dim);
    names.extend((1..=dim).map(|i| format!("y{i}")));
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorMetric {
    dim: usize,
    family: MetricFamily,
    chart: ChartBox,
}

impl FactorMetric {
    pub fn new(dim: usize, family: MetricFamily, chart: ChartBox) -> Result<Self, MetricError> {
        if dim < 2 {
            return Err(MetricError::Dimension(dim));
        }
        if chart.dim() != dim {
            return Err(MetricError::Arity { expected: dim, got: chart.dim() });
        }
        let check = |family: &'static str, got: usize| {
            if got == dim {
                Ok(())
            } else {
                Err(MetricError::Coefficients { family, expected: dim, got })
            }
        };
        match &family {
            MetricFamily::Euclidean => {}
            MetricFamily::RiemannianDiag { coefficients } => check("riemannian_diag", coefficients.len())?,
            MetricFamily::Randers { alpha, beta } => {
                check("randers", alpha.len())?;
                check("randers", beta.len())?;
            }
            MetricFamily::MinkowskiQuartic { coefficients } => {
                check("minkowski_quartic", coefficients.len())?;
                for (i, row) in coefficients.iter().enumerate() {
                    check("minkowski_quartic", row.len())?;
                    for (j, c) in row.iter().enumerate() {
                        if *c != coefficients[j][i] {
                            return Err(MetricError::Invalid("minkowski_quartic coefficients must be symmetric".into()));
                        }
                    }
                }
            }
            MetricFamily::Custom { f_squared } => {
                if f_squared.variables().len() != 2 * dim {
                    return Err(MetricError::Arity { expected: 2 * dim, got: f_squared.variables().len() });
                }
            }
        }
        let metric = Self { dim, family, chart };
        if let MetricFamily::MinkowskiQuartic { .. } = metric.family {
            metric.validate_quartic_convexity()?;
        }
        Ok(metric)
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { dim, family: MetricFamily::Euclidean, chart: ChartBox::cube(dim, -1.0, 1.0) }
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    /// `|b|_alpha(x) = sqrt(sum_i b_i^2 / a_i)` for Randers metrics; `None` for other families.
    pub fn randers_norm(&self, x: &[f64]) -> Option<f64> {
        let MetricFamily::Randers { alpha, beta } = &self.family else {
            return None;
        };
        let mut acc = 0.0;
        for (a, b) in alpha.iter().zip(beta) {
            let a = a.eval_f64(x).ok()?;
            let b = b.eval_f64(x).ok()?;
            if !(a > 0.0) {
                return Some(f64::INFINITY);
            }
            acc += b * b / a;
        }
        Some(libm::sqrt(acc))
    }

    fn validate_quartic_convexity(&self) -> Result<(), MetricError> {
        // The metric is x-independent and homogeneous, so checking unit directions suffices.
        let x = alloc::vec![0.0; self.dim];
        let directions = sphere_probe(self.dim, 48);
        let mut worst = f64::INFINITY;
        for y in &directions {
            let g = fiber_hessian_half(self, &x, y)?;
            worst = worst.min(linalg::symmetric_eigenvalues(&g, self.dim)[0]);
        }
        if worst > 1e-10 {
            Ok(())
        } else {
            Err(MetricError::NotConvex(worst))
        }
    }
}

/// Deterministic set of unit vectors: axis directions, diagonals and points on coordinate circles.
pub fn sphere_probe(dim: usize, per_plane: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..dim {
        let mut e = alloc::vec![0.0; dim];
        e[a] = 1.0;
        out.push(e);
    }
    for a in 0..dim {
        for b in (a + 1)..dim {
            for k in 0..per_plane {
                let t = core::f64::consts::PI * 2.0 * (k as f64 + 0.5) / per_plane as f64;
                let mut y = alloc::vec![0.0; dim];
                y[a] = libm::cos(t);
                y[b] = libm::sin(t);
                out.push(y);
            }
        }
    }
    let diag = 1.0 / libm::sqrt(dim as f64);
    out.push(alloc::vec![diag; dim]);
    out.push((0..dim).map(|i| if i % 2 == 0 { diag } else { -diag }).collect());
    out
}

/// `g_ij = 1/2 d^2 F^2 / dy^i dy^j` at a real point, via a fiber-only jet of order 2.
pub fn fiber_hessian_half<M: FinslerMetric>(metric: &M, x: &[f64], y: &[f64]) -> Result<Vec<f64>, MetricError> {
    let n = metric.dim();
    let space = Arc::new(JetSpace::new(n, 2)?);
    let template = Jet::constant(&space, 0.0);
    let xs: Vec<Jet> = x.iter().map(|&v| template.lift_constant(v)).collect();
    let ys: Vec<Jet> = y.iter().enumerate().map(|(i, &v)| Jet::variable(&space, v, i)).collect::<Result<_, _>>()?;
    let f2 = metric.f_squared(&xs, &ys)?;
    let mut g = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = 0.5 * f2.partial(&[i, j])?;
        }
    }
    Ok(g)
}

fn check_arity<S>(dim: usize, x: &[S], y: &[S]) -> Result<(), MetricError> {
    if x.len() != dim {
        return Err(MetricError::Arity { expected: dim, got: x.len() });
    }
    if y.len() != dim {
        return Err(MetricError::Arity { expected: dim, got: y.len() });
    }
    Ok(())
}

impl FinslerMetric for FactorMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn f_squared<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, MetricError> {
        check_arity(self.dim, x, y)?;
        let template = &y[0];
        let quadratic = |coefficients: Option<&[Expr]>| -> Result<S, MetricError> {
            let mut acc = template.lift_constant(0.0);
            for (i, yi) in y.iter().enumerate() {
                let sq = yi.square();
                let term = match coefficients {
                    Some(c) => c[i].eval(template, x)?.mul(&sq),
                    None => sq,
                };
                acc = acc.add(&term);
            }
            Ok(acc)
        };
        match &self.family {
            MetricFamily::Euclidean => quadratic(None),
            MetricFamily::RiemannianDiag { coefficients } => quadratic(Some(coefficients)),
            MetricFamily::Randers { alpha, beta } => {
                if y.iter().all(|v| v.value() == 0.0) {
                    return Err(MetricError::ZeroFiber);
                }
                let alpha = quadratic(Some(alpha))?.sqrt()?;
                let mut b = template.lift_constant(0.0);
                for (bi, yi) in beta.iter().zip(y) {
                    b = b.add(&bi.eval(template, x)?.mul(yi));
                }
                Ok(alpha.add(&b).square())
            }
            MetricFamily::MinkowskiQuartic { coefficients } => {
                if y.iter().all(|v| v.value() == 0.0) {
                    return Err(MetricError::ZeroFiber);
                }
                let squares: Vec<S> = y.iter().map(Scalar::square).collect();
                let mut q = template.lift_constant(0.0);
                for (i, row) in coefficients.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        if c != 0.0 {
                            q = q.add(&squares[i].mul(&squares[j]).scale(c));
                        }
                    }
                }
                Ok(q.sqrt()?)
            }
            MetricFamily::Custom { f_squared } => {
                if y.iter().all(|v| v.value() == 0.0) {
                    return Err(MetricError::ZeroFiber);
                }
                let env: Vec<S> = x.iter().chain(y).cloned().collect();
                Ok(f_squared.eval(template, &env)?)
            }
        }
    }

    fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        if !self.chart.contains(x) || y.len() != self.dim || y.iter().all(|v| *v == 0.0) {
            return false;
        }
        match &self.family {
            MetricFamily::Randers { alpha, .. } => {
                let positive = alpha.iter().all(|a| a.eval_f64(x).is_ok_and(|v| v > 0.0));
                positive && self.randers_norm(x).is_some_and(|b| b < RANDERS_NORM_LIMIT)
            }
            MetricFamily::RiemannianDiag { coefficients } => {
                coefficients.iter().all(|a| a.eval_f64(x).is_ok_and(|v| v > 0.0))
            }
            MetricFamily::Custom { .. } => self.f_squared(x, y).is_ok_and(|v| v > 0.0),
            _ => true,
        }
    }

    fn is_quadratic(&self) -> bool {
        matches!(self.family, MetricFamily::Euclidean | MetricFamily::RiemannianDiag { .. })
    }
}

/// Per-sample outcome of a strong convexity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub smallest_eigenvalues: Vec<f64>,
    pub failures: Vec<usize>,
    pub pass: bool,
}

/// Smallest eigenvalue of the fundamental tensor at every sample; passes iff all exceed `1e-10`.
pub fn check_strong_convexity<M: FinslerMetric>(metric: &M, samples: &[(Vec<f64>, Vec<f64>)]) -> ConvexityReport {
    let n = metric.dim();
    let smallest_eigenvalues: Vec<f64> = samples
        .iter()
        .map(|(x, y)| match fiber_hessian_half(metric, x, y) {
            Ok(g) => linalg::symmetric_eigenvalues(&g, n)[0],
            Err(_) => f64::NAN,
        })
        .collect();
    let failures: Vec<usize> =
        smallest_eigenvalues.iter().enumerate().filter(|(_, v)| !(**v > 1e-10)).map(|(i, _)| i).collect();
    ConvexityReport { pass: failures.is_empty() && !samples.is_empty(), smallest_eigenvalues, failures }
}

/// A positive warping function `f` on one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Warping {
    expr: Expr,
    positivity: ChartBox,
}

impl Warping {
    pub fn new(expr: Expr, positivity: ChartBox) -> Result<Self, MetricError> {
        if expr.variables().len() != positivity.dim() {
            return Err(MetricError::Arity { expected: positivity.dim(), got: expr.variables().len() });
        }
        Ok(Self { expr, positivity })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let expr = Expr::from_node(crate::expr::Node::Const(value), base_variable_names(dim)).expect("no variables");
        Self { expr, positivity: ChartBox::cube(dim, -1.0, 1.0) }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn positivity_box(&self) -> &ChartBox {
        &self.positivity
    }

    pub fn dim(&self) -> usize {
        self.positivity.dim()
    }

    /// Syntactically constant (no variable occurs in the expression).
    pub fn is_syntactically_constant(&self) -> bool {
        self.expr.is_constant()
    }

    pub fn eval<S: Scalar>(&self, template: &S, x: &[S]) -> Result<S, MetricError> {
        let f = self.expr.eval(template, x)?;
        if !(f.value() > 0.0) {
            return Err(MetricError::NonPositiveWarping(f.value()));
        }
        Ok(f)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, MetricError> {
        self.eval(&0.0, x)
    }

    /// `(f(x), grad f(x))` from a first-order jet.
    pub fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), MetricError> {
        let n = self.dim();
        let space = Arc::new(JetSpace::new(n, 1)?);
        let vars: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(&space, v, i)).collect::<Result<_, _>>()?;
        let f = self.eval(&vars[0], &vars)?;
        let grad = (0..n).map(|i| f.partial(&[i])).collect::<Result<_, _>>()?;
        Ok((f.value(), grad))
    }

    /// Gradient of `f^2`, i.e. `2 f df`.
    pub fn sq_grad(&self, x: &[f64]) -> Result<Vec<f64>, MetricError> {
        let (f, grad) = self.value_and_grad(x)?;
        Ok(grad.into_iter().map(|g| 2.0 * f * g).collect())
    }

    /// Largest `|grad f^2|_inf` over the positivity box probe grid.
    pub fn max_sq_grad(&self, per_axis: usize) -> Result<f64, MetricError> {
        let mut worst = 0.0f64;
        for x in self.positivity.grid(per_axis) {
            for g in self.sq_grad(&x)? {
                worst = worst.max(libm::fabs(g));
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn exprs(texts: &[&str], dim: usize) -> Vec<Expr> {
        let names = base_variable_names(dim);
        texts.iter().map(|t| Expr::parse(t, &names).unwrap()).collect()
    }

    fn box2() -> ChartBox {
        ChartBox::cube(2, -1.0, 1.0)
    }

    #[test]
    fn euclidean_value() {
        let m = FactorMetric::euclidean(2);
        assert_eq!(m.f_squared(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn riemannian_diag_substitution() {
        let m = FactorMetric::new(
            2,
            MetricFamily::RiemannianDiag { coefficients: exprs(&["1", "x1^2"], 2) },
            ChartBox::new(vec![1.0, -1.0], vec![3.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(m.f_squared(&[2.0, 0.0], &[1.0, 1.0]).unwrap(), 5.0);
        assert!(m.is_quadratic());
    }

    #[test]
    fn randers_with_zero_beta_is_alpha() {
        let a = exprs(&["1 + 0.1*x1^2", "2 + sin(x2)"], 2);
        let r = FactorMetric::new(2, MetricFamily::Randers { alpha: a.clone(), beta: exprs(&["0", "0"], 2) }, box2()).unwrap();
        let q = FactorMetric::new(2, MetricFamily::RiemannianDiag { coefficients: a }, box2()).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.37;
            let x = [libm::sin(t) * 0.9, libm::cos(1.3 * t) * 0.9];
            let y = [libm::cos(t) + 0.2, libm::sin(2.0 * t) - 0.3];
            let diff = r.f_squared(&x, &y).unwrap() - q.f_squared(&x, &y).unwrap();
            assert!(diff.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_fiber_rejected_for_non_quadratic() {
        let r = FactorMetric::new(2, MetricFamily::Randers { alpha: exprs(&["1", "1"], 2), beta: exprs(&["0.1", "0"], 2) }, box2()).unwrap();
        assert_eq!(r.f_squared(&[0.0, 0.0], &[0.0, 0.0]).unwrap_err(), MetricError::ZeroFiber);
    }

    #[test]
    fn homogeneity_and_euler() {
        let r = FactorMetric::new(
            2,
            MetricFamily::Randers { alpha: exprs(&["1 + 0.2*x2^2", "1.5"], 2), beta: exprs(&["0.3*x1", "0.2"], 2) },
            box2(),
        )
        .unwrap();
        let x = [0.4, -0.3];
        let y = [0.7, -1.1];
        let base = r.f_squared(&x, &y).unwrap();
        for lambda in [0.5, 2.0, 3.0] {
            let scaled = r.f_squared(&x, &[lambda * y[0], lambda * y[1]]).unwrap();
            assert!((scaled - lambda * lambda * base).abs() < 1e-10 * lambda * lambda * base);
        }
    }

    #[test]
    fn convexity_scan() {
        let eu = FactorMetric::euclidean(2);
        let samples: Vec<(Vec<f64>, Vec<f64>)> = sphere_probe(2, 8).into_iter().map(|y| (vec![0.0, 0.0], y)).collect();
        let report = check_strong_convexity(&eu, &samples);
        assert!(report.pass);
        assert!(report.smallest_eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let good = FactorMetric::new(2, MetricFamily::Randers { alpha: exprs(&["1", "1"], 2), beta: exprs(&["0.5", "0"], 2) }, box2()).unwrap();
        assert!(check_strong_convexity(&good, &samples).pass);
        let bad = FactorMetric::new(2, MetricFamily::Randers { alpha: exprs(&["1", "1"], 2), beta: exprs(&["1.2", "0"], 2) }, box2()).unwrap();
        let report = check_strong_convexity(&bad, &samples);
        assert!(!report.pass);
        assert!(!report.failures.is_empty());
        assert!(!bad.is_admissible(&[0.0, 0.0], &[1.0, 0.0]));
    }

    #[test]
    fn quartic_convexity_validated_at_load() {
        let ok = FactorMetric::new(2, MetricFamily::MinkowskiQuartic { coefficients: vec![vec![1.0, 0.6], vec![0.6, 1.0]] }, box2());
        assert!(ok.is_ok());
        // Pure l4 norm is degenerate along the axes.
        let degenerate = FactorMetric::new(2, MetricFamily::MinkowskiQuartic { coefficients: vec![vec![1.0, 0.0], vec![0.0, 1.0]] }, box2());
        assert!(matches!(degenerate, Err(MetricError::NotConvex(_))));
    }

    #[test]
    fn warping_values_and_gradients() {
        let names = base_variable_names(2);
        let c = Warping::new(Expr::parse("3", &names).unwrap(), box2()).unwrap();
        assert_eq!(c.value(&[0.2, 0.1]).unwrap(), 3.0);
        assert_eq!(c.sq_grad(&[0.2, 0.1]).unwrap(), vec![0.0, 0.0]);

        let e = Warping::new(Expr::parse("exp(0.3*x1)", &names).unwrap(), box2()).unwrap();
        assert_eq!(e.value(&[0.0, 0.0]).unwrap(), 1.0);
        assert!((e.sq_grad(&[0.0, 0.0]).unwrap()[0] - 0.6).abs() < 1e-15);

        let p = Warping::new(Expr::parse("1 + x1^2", &names).unwrap(), box2()).unwrap();
        let h = 1e-5;
        let f2 = |t: f64| libm::pow(1.0 + t * t, 2.0);
        let fd = (f2(0.5 + h) - f2(0.5 - h)) / (2.0 * h);
        assert!((p.sq_grad(&[0.5, 0.0]).unwrap()[0] - fd).abs() < 1e-8);

        let neg = Warping::new(Expr::parse("x1", &names).unwrap(), box2()).unwrap();
        assert!(matches!(neg.value(&[-0.5, 0.0]), Err(MetricError::NonPositiveWarping(_))));
    }
}
