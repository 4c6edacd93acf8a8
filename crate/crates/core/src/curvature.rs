//! Non-Riemannian curvature of a Finsler metric at a tangent sample.
//!
//! One jet evaluation of `F^2` in the combined variables `(x, y)` yields every quantity: the
//! spray is assembled as a jet, and Berwald-type tensors are read off its fiber derivatives.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::jet::{jet_matrix_inverse, Jet, JetError, JetMatrix, JetSpace};
use crate::linalg;
use crate::metric::{FinslerMetric, MetricError};
use crate::tensor::Tensor;

/// Fiber vectors shorter than this are rejected.
pub const MIN_FIBER_NORM: f64 = 1e-6;

/// Fundamental tensors whose smallest eigenvalue is not above this are rejected.
pub const MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("sample has {got} coordinates, metric dimension is {expected}")]
    Arity { expected: usize, got: usize },
    #[error("fiber vector norm {0:e} is below the admissible minimum")]
    ShortFiber(f64),
    #[error("sample is outside the admissible domain of the metric")]
    Inadmissible,
    #[error("fundamental tensor is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Samples drawn at the same base point share a group.
    pub group: usize,
}

impl TangentSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y, group: 0 }
    }

    pub fn with_group(mut self, group: usize) -> Self {
        self.group = group;
        self
    }

    pub fn fiber_norm(&self) -> f64 {
        libm::sqrt(self.y.iter().map(|v| v * v).sum())
    }

    /// Chart, family and fiber-length checks (positive definiteness is checked during evaluation).
    pub fn is_admissible<M: FinslerMetric>(&self, metric: &M) -> bool {
        self.x.len() == metric.dim() && self.fiber_norm() > MIN_FIBER_NORM && metric.is_admissible(&self.x, &self.y)
    }
}

/// Every curvature quantity at one sample. Upper spray indices come first in `spray`, `berwald`,
/// `douglas`; `mean_berwald_dy[j,k,l]` is `dE_jk / dy^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBundle {
    pub sample: TangentSample,
    pub f_squared: f64,
    pub g: Tensor,
    pub g_inv: Tensor,
    pub y_lower: Tensor,
    pub cartan: Tensor,
    pub mean_cartan: Tensor,
    pub angular: Tensor,
    pub spray: Tensor,
    pub berwald: Tensor,
    pub mean_berwald: Tensor,
    pub mean_berwald_dy: Option<Tensor>,
    pub douglas: Option<Tensor>,
    pub landsberg: Tensor,
    pub mean_landsberg: Tensor,
    pub dually_flat: Tensor,
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }
}

fn validate<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<(), CurvatureError> {
    let n = metric.dim();
    for len in [sample.x.len(), sample.y.len()] {
        if len != n {
            return Err(CurvatureError::Arity { expected: n, got: len });
        }
    }
    let norm = sample.fiber_norm();
    if !(norm > MIN_FIBER_NORM) {
        return Err(CurvatureError::ShortFiber(norm));
    }
    if !metric.is_admissible(&sample.x, &sample.y) {
        return Err(CurvatureError::Inadmissible);
    }
    Ok(())
}

/// `F^2` as a jet in the `2n` variables `(x, y)`; `x` is seeded only when `seed_base` is set.
pub(crate) fn f_squared_jet<M: FinslerMetric>(
    metric: &M,
    sample: &TangentSample,
    order: usize,
    seed_base: bool,
) -> Result<(Jet, usize), CurvatureError> {
    let n = metric.dim();
    let (dim, fiber_offset) = if seed_base { (2 * n, n) } else { (n, 0) };
    let space = Arc::new(JetSpace::new(dim, order)?);
    let xs: Vec<Jet> = sample
        .x
        .iter()
        .enumerate()
        .map(|(i, &v)| if seed_base { Jet::variable(&space, v, i) } else { Ok(Jet::constant(&space, v)) })
        .collect::<Result<_, _>>()?;
    let ys: Vec<Jet> =
        sample.y.iter().enumerate().map(|(i, &v)| Jet::variable(&space, v, fiber_offset + i)).collect::<Result<_, _>>()?;
    Ok((metric.f_squared(&xs, &ys)?, fiber_offset))
}

/// `g_ij` as jets (two orders below `p`).
pub(crate) fn metric_jets(p: &Jet, n: usize, fiber: usize) -> Result<JetMatrix, CurvatureError> {
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let di = p.derivative(fiber + i)?;
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(di.derivative(fiber + j)?.scale(0.5));
        }
        rows.push(row);
    }
    Ok(JetMatrix::from_rows(rows)?)
}

fn check_positive(g: &Tensor) -> Result<(), CurvatureError> {
    let smallest = linalg::symmetric_eigenvalues(g.data(), g.dim())[0];
    if smallest > MIN_EIGENVALUE {
        Ok(())
    } else {
        Err(CurvatureError::NotPositiveDefinite(smallest))
    }
}

fn values(m: &JetMatrix) -> Tensor {
    let n = m.size();
    Tensor::from_fn(2, n, |i| m.get(i[0], i[1]).value())
}

/// `(g_ij, g^ij)` at the sample.
pub fn fundamental_tensor<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<(Tensor, Tensor), CurvatureError> {
    validate(metric, sample)?;
    let n = metric.dim();
    let (p, fiber) = f_squared_jet(metric, sample, 2, false)?;
    let g = values(&metric_jets(&p, n, fiber)?);
    check_positive(&g)?;
    let inv = linalg::inverse(g.data(), n).ok_or(CurvatureError::NotPositiveDefinite(0.0))?;
    Ok((g, Tensor::from_vec(2, n, inv).expect("square")))
}

/// Cartan torsion `C_ijk = 1/4 d^3 F^2 / dy^i dy^j dy^k` and its trace `I_i = g^jk C_ijk`.
pub fn cartan_and_mean<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<(Tensor, Tensor), CurvatureError> {
    validate(metric, sample)?;
    let n = metric.dim();
    let (p, fiber) = f_squared_jet(metric, sample, 3, false)?;
    let g = values(&metric_jets(&p, n, fiber)?);
    check_positive(&g)?;
    let g_inv = Tensor::from_vec(2, n, linalg::inverse(g.data(), n).ok_or(CurvatureError::NotPositiveDefinite(0.0))?)
        .expect("square");
    let cartan = cartan_from(&p, n, fiber)?;
    let mean = trace_last_two(&cartan, &g_inv);
    Ok((cartan, mean))
}

fn cartan_from(p: &Jet, n: usize, fiber: usize) -> Result<Tensor, CurvatureError> {
    let mut c = Tensor::zeros(3, n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let v = 0.25 * p.partial(&[fiber + i, fiber + j, fiber + k])?;
                for idx in permutations3(i, j, k) {
                    c.set(&idx, v);
                }
            }
        }
    }
    Ok(c)
}

fn permutations3(i: usize, j: usize, k: usize) -> [[usize; 3]; 6] {
    [[i, j, k], [i, k, j], [j, i, k], [j, k, i], [k, i, j], [k, j, i]]
}

/// `T_i g^{jk}` contraction of the last two slots of a rank-3 tensor.
pub(crate) fn trace_last_two(t: &Tensor, g_inv: &Tensor) -> Tensor {
    let n = t.dim();
    Tensor::from_fn(1, n, |i| {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += g_inv.at2(j, k) * t.at3(i[0], j, k);
            }
        }
        acc
    })
}

/// `h_ij = g_ij - F^-2 y_i y_j`.
pub fn angular_metric(g: &Tensor, y_lower: &Tensor, f_squared: f64) -> Tensor {
    let n = g.dim();
    Tensor::from_fn(2, n, |i| g.at2(i[0], i[1]) - y_lower.at1(i[0]) * y_lower.at1(i[1]) / f_squared)
}

/// Geodesic spray coefficients `G^i` as jets in the combined `(x, y)` space.
fn spray_jets(p: &Jet, n: usize, g_inv: &JetMatrix, y: &[f64]) -> Result<Vec<Jet>, CurvatureError> {
    let space = p.space().clone();
    let ys: Vec<Jet> = (0..n).map(|k| Jet::variable(&space, y[k], n + k)).collect::<Result<_, _>>()?;
    let mut brace = Vec::with_capacity(n);
    for l in 0..n {
        let dyl = p.derivative(n + l)?;
        let mut acc = p.derivative(l)?.scale(-1.0);
        for (k, yk) in ys.iter().enumerate() {
            acc = acc.try_add(&dyl.derivative(k)?.try_mul(yk)?)?;
        }
        brace.push(acc);
    }
    let mut spray = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = g_inv.get(i, 0).try_mul(&brace[0])?;
        for l in 1..n {
            acc = acc.try_add(&g_inv.get(i, l).try_mul(&brace[l])?)?;
        }
        spray.push(acc.scale(0.25));
    }
    Ok(spray)
}

/// `G^i` at the sample.
pub fn spray<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<Tensor, CurvatureError> {
    validate(metric, sample)?;
    let n = metric.dim();
    let (p, _) = f_squared_jet(metric, sample, 2, true)?;
    let g = metric_jets(&p, n, n)?;
    check_positive(&values(&g))?;
    let g_inv = jet_matrix_inverse(&g)?;
    let s = spray_jets(&p, n, &g_inv, &sample.y)?;
    Ok(Tensor::from_fn(1, n, |i| s[i[0]].value()))
}

/// Symmetric fiber-derivative tensor of a family of jets: `T[a, j1..jr] = d^r J_a / dy^j1..dy^jr`.
fn fiber_derivatives(jets: &[Jet], n: usize, r: usize) -> Result<Tensor, CurvatureError> {
    let mut out = Tensor::zeros(r + 1, n);
    let mut idx = alloc::vec![0usize; r + 1];
    let mut vars = alloc::vec![0usize; r];
    for k in 0..out.len() {
        out.unflatten(k, &mut idx);
        // compute each sorted multi-index once
        if idx[1..].windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        for (slot, v) in vars.iter_mut().enumerate() {
            *v = n + idx[slot + 1];
        }
        let value = jets[idx[0]].partial(&vars)?;
        fill_permutations(&mut out, idx[0], &idx[1..], value);
    }
    Ok(out)
}

fn fill_permutations(t: &mut Tensor, head: usize, tail: &[usize], value: f64) {
    let mut perm: Vec<usize> = tail.to_vec();
    // Heap's algorithm over the tail slots; repeats are harmless.
    let r = perm.len();
    let mut c = alloc::vec![0usize; r];
    let write = |t: &mut Tensor, p: &[usize]| {
        let mut full = Vec::with_capacity(r + 1);
        full.push(head);
        full.extend_from_slice(p);
        t.set(&full, value);
    };
    write(t, &perm);
    let mut i = 0;
    while i < r {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            write(t, &perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `E_jk = 1/2 B^m_jkm`.
pub fn mean_berwald(berwald: &Tensor) -> Tensor {
    let n = berwald.dim();
    Tensor::from_fn(2, n, |i| 0.5 * (0..n).map(|m| berwald.at4(m, i[0], i[1], m)).sum::<f64>())
}

/// `D^i_jkl = B^i_jkl - 2/(n+1) (E_jk d^i_l + E_jl d^i_k + E_kl d^i_j + dE_jk/dy^l y^i)`.
pub fn douglas(berwald: &Tensor, mean_berwald: &Tensor, mean_berwald_dy: &Tensor, y: &[f64]) -> Tensor {
    let n = berwald.dim();
    let c = 2.0 / (n as f64 + 1.0);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Tensor::from_fn(4, n, |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let trace = mean_berwald.at2(j, k) * delta(i, l)
            + mean_berwald.at2(j, l) * delta(i, k)
            + mean_berwald.at2(k, l) * delta(i, j)
            + mean_berwald_dy.at3(j, k, l) * y[i];
        berwald.at4(i, j, k, l) - c * trace
    })
}

/// `L_ijk = -1/2 y_l B^l_ijk` and `J_i = g^jk L_ijk`.
pub fn landsberg_and_mean(berwald: &Tensor, y_lower: &Tensor, g_inv: &Tensor) -> (Tensor, Tensor) {
    let n = berwald.dim();
    let l = Tensor::from_fn(3, n, |ix| -0.5 * (0..n).map(|m| y_lower.at1(m) * berwald.at4(m, ix[0], ix[1], ix[2])).sum::<f64>());
    let j = trace_last_two(&l, g_inv);
    (l, j)
}

/// `R_l = d^2 F^2 / dx^k dy^l y^k - 2 dF^2/dx^l`.
pub fn dually_flat_residual<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<Tensor, CurvatureError> {
    validate(metric, sample)?;
    let n = metric.dim();
    let (p, _) = f_squared_jet(metric, sample, 2, true)?;
    dually_flat_from(&p, n, &sample.y)
}

fn dually_flat_from(p: &Jet, n: usize, y: &[f64]) -> Result<Tensor, CurvatureError> {
    let mut r = Tensor::zeros(1, n);
    for l in 0..n {
        let mut acc = -2.0 * p.partial(&[l])?;
        for (k, yk) in y.iter().enumerate() {
            acc += p.partial(&[k, n + l])? * yk;
        }
        r.set(&[l], acc);
    }
    Ok(r)
}

/// Options for [`compute_bundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleOptions {
    /// Also compute `dE/dy` and the Douglas tensor (needs order-6 jets instead of order 5).
    pub douglas: bool,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self { douglas: true }
    }
}

/// Berwald tensors of the spray from [`compute_bundle`]'s single jet pass; useful on its own.
pub fn berwald<M: FinslerMetric>(metric: &M, sample: &TangentSample) -> Result<(Tensor, Tensor), CurvatureError> {
    let b = compute_bundle(metric, sample, BundleOptions { douglas: false })?;
    Ok((b.berwald, b.mean_berwald))
}

/// Evaluates every quantity at `sample` from one jet of `F^2`.
pub fn compute_bundle<M: FinslerMetric>(
    metric: &M,
    sample: &TangentSample,
    options: BundleOptions,
) -> Result<CurvatureBundle, CurvatureError> {
    validate(metric, sample)?;
    let n = metric.dim();
    let order = if options.douglas { 6 } else { 5 };
    let (p, _) = f_squared_jet(metric, sample, order, true)?;
    let g_jets = metric_jets(&p, n, n)?;
    let g = values(&g_jets);
    check_positive(&g)?;
    let g_inv_jets = jet_matrix_inverse(&g_jets)?;
    let g_inv = values(&g_inv_jets);
    let y = &sample.y;
    let f_squared = p.value();
    let y_lower = Tensor::from_fn(1, n, |i| (0..n).map(|j| g.at2(i[0], j) * y[j]).sum());
    let cartan = cartan_from(&p, n, n)?;
    let mean_cartan = trace_last_two(&cartan, &g_inv);
    let angular = angular_metric(&g, &y_lower, f_squared);

    let spray_j = spray_jets(&p, n, &g_inv_jets, y)?;
    let spray = Tensor::from_fn(1, n, |i| spray_j[i[0]].value());
    let berwald = fiber_derivatives(&spray_j, n, 3)?;
    let mean_berwald = mean_berwald(&berwald);
    let (mean_berwald_dy, douglas) = if options.douglas {
        let fourth = fiber_derivatives(&spray_j, n, 4)?;
        let de = Tensor::from_fn(3, n, |ix| 0.5 * (0..n).map(|m| fourth.get(&[m, ix[0], ix[1], m, ix[2]])).sum::<f64>());
        let d = self::douglas(&berwald, &mean_berwald, &de, y);
        (Some(de), Some(d))
    } else {
        (None, None)
    };
    let (landsberg, mean_landsberg) = landsberg_and_mean(&berwald, &y_lower, &g_inv);
    let dually_flat = dually_flat_from(&p, n, y)?;
    Ok(CurvatureBundle {
        sample: sample.clone(),
        f_squared,
        g,
        g_inv,
        y_lower,
        cartan,
        mean_cartan,
        angular,
        spray,
        berwald,
        mean_berwald,
        mean_berwald_dy,
        douglas,
        landsberg,
        mean_landsberg,
        dually_flat,
    })
}

/// Default bound on symmetry defects, relative to the tensor's max norm.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Default bound on Euler contractions, relative to `max|T| * sum|y^i|`.
pub const EULER_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    Symmetry,
    Euler,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub kind: IdentityKind,
    /// Relative residual; zero when the tensor itself vanishes.
    pub value: f64,
    pub tolerance: f64,
}

impl IdentityResidual {
    pub fn holds(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        defect / scale
    } else {
        defect
    }
}

/// Symmetries and Euler contractions every bundle must satisfy.
pub fn identity_residuals(b: &CurvatureBundle) -> Vec<IdentityResidual> {
    let y = &b.sample.y;
    let y1: f64 = y.iter().map(|v| libm::fabs(*v)).sum();
    let mut out = Vec::new();
    let mut sym = |name: &'static str, t: &Tensor, slots: &[usize]| {
        out.push(IdentityResidual {
            name,
            kind: IdentityKind::Symmetry,
            value: relative(t.asymmetry_over(slots), t.max_abs()),
            tolerance: SYMMETRY_TOLERANCE,
        });
    };
    sym("g", &b.g, &[0, 1]);
    sym("E", &b.mean_berwald, &[0, 1]);
    sym("h", &b.angular, &[0, 1]);
    sym("C", &b.cartan, &[0, 1, 2]);
    sym("L", &b.landsberg, &[0, 1, 2]);
    sym("B", &b.berwald, &[1, 2, 3]);
    if let Some(d) = &b.douglas {
        sym("D", d, &[1, 2, 3]);
    }
    let mut euler = |name: &'static str, t: &Tensor, slot: usize, scale: f64| {
        out.push(IdentityResidual {
            name,
            kind: IdentityKind::Euler,
            value: relative(t.contract(slot, y).max_abs(), scale * y1),
            tolerance: EULER_TOLERANCE,
        });
    };
    euler("C.y", &b.cartan, 0, b.cartan.max_abs());
    // h is not small, so its contraction is measured against g
    euler("h.y", &b.angular, 1, b.g.max_abs());
    euler("B.y", &b.berwald, 3, b.berwald.max_abs());
    euler("E.y", &b.mean_berwald, 1, b.mean_berwald.max_abs());
    euler("y.L", &b.landsberg, 0, b.landsberg.max_abs());
    if let Some(d) = &b.douglas {
        euler("D.y", d, 3, d.max_abs());
    }
    out
}
