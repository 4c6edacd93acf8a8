//! Finite-difference reconstruction of the curvature tensors from pointwise evaluations of `F^2`.
//!
//! Derivatives use tensor-product central stencils whose error is even in the step, refined by
//! Richardson extrapolation over successive step halvings. Fiber steps are relative to
//! [`FinslerMetric::fiber_step_scale`], which is `|y|` unless the metric knows better.
//! Quantities of fiber order at most three are differenced from `F^2` directly; the Berwald and
//! Douglas tensors difference a spray that is itself assembled from differenced `F^2`.
//! That nesting amplifies roundoff by the product of both stencil denominators, so every
//! evaluation and stencil runs in double-double arithmetic ([`Dd`]) and only the final
//! tensors are rounded to `f64`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Sub};

use crate::curvature::{angular_metric, douglas, landsberg_and_mean, mean_berwald, CurvatureBundle, CurvatureError, TangentSample};
use crate::dd::{self, Dd};
use crate::linalg;
use crate::metric::{FinslerMetric, MetricError};
use crate::tensor::Tensor;

/// Step schedule of one Richardson-extrapolated difference.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FdConfig {
    /// Largest step; a multiple of the metric's fiber step scale for fiber directions.
    pub step: f64,
    pub halvings: usize,
}

impl FdConfig {
    pub const fn new(step: f64, halvings: usize) -> Self {
        Self { step, halvings }
    }
}

/// Step schedules for the oracle: `direct` differences `F^2`, `outer` differences the spray.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleConfig {
    pub direct: FdConfig,
    pub outer: FdConfig,
    /// Absolute scale of base-point steps relative to fiber steps.
    pub base_scale: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { direct: FdConfig::new(0.01, 4), outer: FdConfig::new(0.025, 2), base_scale: 1.0 }
    }
}

/// Arithmetic the stencils run in: `f64` for the public helpers, [`Dd`] inside the oracle.
pub trait FdField:
    Copy + From<f64> + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + Div<Output = Self> + Div<f64, Output = Self>
{
    fn to_f64(self) -> f64;
}

impl FdField for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl FdField for Dd {
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw central-difference estimate of a mixed partial at step scale `t`: `vars` lists one
/// direction per derivative and `scales[i]` multiplies the step along `vars[i]`.
pub fn central_stencil<T: FdField, F>(f: &F, point: &[T], vars: &[usize], scales: &[f64], t: f64) -> Result<T, MetricError>
where
    F: Fn(&[T]) -> Result<T, MetricError>,
{
    Ok(stencil_vector(&|p: &[T]| f(p).map(|v| vec![v]), point, vars, scales, t, 1)?[0])
}

/// Neville tableau for even error expansions; `estimates[j]` uses step `h / 2^j`.
pub fn richardson<T: FdField>(estimates: &[T]) -> T {
    let mut row = estimates.to_vec();
    let mut factor = 4.0;
    for level in 1..estimates.len() {
        for j in (level..estimates.len()).rev() {
            row[j] = (row[j] * factor - row[j - 1]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    row.last().copied().unwrap_or(T::from(0.0))
}

/// Every level of the stencil for a schedule; the extrapolated value is `richardson` of these.
pub fn stencil_levels<T: FdField, F>(f: &F, point: &[T], vars: &[usize], scales: &[f64], cfg: FdConfig) -> Result<Vec<T>, MetricError>
where
    F: Fn(&[T]) -> Result<T, MetricError>,
{
    (0..=cfg.halvings).map(|j| central_stencil(f, point, vars, scales, cfg.step / libm::pow(2.0, j as f64))).collect()
}

/// Richardson-extrapolated `d^k f / dz^vars[0] .. dz^vars[k-1]`; `scales[i]` multiplies the step
/// along `vars[i]`.
pub fn partial<T: FdField, F>(f: &F, point: &[T], vars: &[usize], scales: &[f64], cfg: FdConfig) -> Result<T, MetricError>
where
    F: Fn(&[T]) -> Result<T, MetricError>,
{
    if vars.is_empty() {
        return f(point);
    }
    Ok(richardson(&stencil_levels(f, point, vars, scales, cfg)?))
}

/// Reconstructed tensors, laid out like [`CurvatureBundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBundle {
    pub f_squared: f64,
    pub g: Tensor,
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


struct Evaluator<'a, M: FinslerMetric> {
    metric: &'a M,
    n: usize,
    cfg: OracleConfig,
    fiber_scale: f64,
}

impl<M: FinslerMetric> Evaluator<'_, M> {
    /// `F^2` on the packed point `(x, y)`.
    fn f2(&self, z: &[Dd]) -> Result<Dd, MetricError> {
        let (x, y) = z.split_at(self.n);
        self.metric.f_squared::<Dd>(x, y)
    }

    fn scales(&self, vars: &[usize]) -> Vec<f64> {
        vars.iter().map(|&v| if v < self.n { self.cfg.base_scale } else { self.fiber_scale }).collect()
    }

    fn d(&self, z: &[Dd], vars: &[usize]) -> Result<Dd, MetricError> {
        partial(&|p: &[Dd]| self.f2(p), z, vars, &self.scales(vars), self.cfg.direct)
    }

    fn metric_at(&self, z: &[Dd]) -> Result<Vec<Dd>, MetricError> {
        let n = self.n;
        let mut g = vec![Dd::ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.d(z, &[n + i, n + j])? * 0.5;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// `G^i = 1/4 g^il (d^2F^2/dx^k dy^l y^k - dF^2/dx^l)` from differenced `F^2`.
    fn spray_at(&self, z: &[Dd]) -> Result<Vec<Dd>, MetricError> {
        let n = self.n;
        let g = self.metric_at(z)?;
        let g_inv = dd::inverse(&g, n).ok_or(MetricError::Invalid("singular fundamental tensor".into()))?;
        let mut q = vec![Dd::ZERO; n];
        for (l, ql) in q.iter_mut().enumerate() {
            let mut acc = -self.d(z, &[l])?;
            for k in 0..n {
                acc = acc + self.d(z, &[k, n + l])? * z[n + k];
            }
            *ql = acc;
        }
        Ok((0..n).map(|i| (0..n).fold(Dd::ZERO, |acc, l| acc + g_inv[i * n + l] * q[l]) * 0.25).collect())
    }

    /// `d^r G^i / dy^j1 .. dy^jr` by differencing the reconstructed spray.
    fn spray_fiber_tensor(&self, z: &[Dd], r: usize) -> Result<Tensor, MetricError> {
        let n = self.n;
        let mut out = Tensor::zeros(r + 1, n);
        let mut idx = vec![0usize; r];
        let total = libm::pow(n as f64, r as f64) as usize;
        for flat in 0..total {
            let mut k = flat;
            for slot in (0..r).rev() {
                idx[slot] = k % n;
                k /= n;
            }
            if idx.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            let vars: Vec<usize> = idx.iter().map(|&j| n + j).collect();
            let scales = vec![self.fiber_scale; r];
            let mut levels: Vec<Vec<Dd>> = vec![Vec::new(); n];
            for j in 0..=self.cfg.outer.halvings {
                let t = self.cfg.outer.step / libm::pow(2.0, j as f64);
                let comps = stencil_vector(&|p: &[Dd]| self.spray_at(p), z, &vars, &scales, t, n)?;
                for (i, c) in comps.into_iter().enumerate() {
                    levels[i].push(c);
                }
            }
            for (i, l) in levels.iter().enumerate() {
                let value = richardson(l).to_f64();
                for perm in permutations(&idx) {
                    let mut full = vec![i];
                    full.extend(perm);
                    out.set(&full, value);
                }
            }
        }
        Ok(out)
    }
}

/// Central stencil applied componentwise to a vector-valued function. Offsets and the
/// denominator are formed in `T`, so with [`Dd`] the stencil nodes are exact.
fn stencil_vector<T: FdField, F>(f: &F, point: &[T], vars: &[usize], scales: &[f64], t: f64, len: usize) -> Result<Vec<T>, MetricError>
where
    F: Fn(&[T]) -> Result<Vec<T>, MetricError>,
{
    let mut dirs: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut dir_steps: Vec<T> = Vec::new();
    for (v, s) in vars.iter().zip(scales) {
        if let Some(pos) = dirs.iter().position(|d| d == v) {
            counts[pos] += 1;
        } else {
            dirs.push(*v);
            counts.push(1);
            dir_steps.push(T::from(t) * T::from(*s));
        }
    }
    let mut offsets = vec![0usize; dirs.len()];
    let mut acc = vec![T::from(0.0); len];
    let mut x = point.to_vec();
    loop {
        x.copy_from_slice(point);
        let mut weight = 1.0;
        for (slot, (&d, &a)) in dirs.iter().zip(&counts).enumerate() {
            let j = offsets[slot];
            x[d] = x[d] + dir_steps[slot] * (a as f64 / 2.0 - j as f64);
            weight *= binomial(a, j) * if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        }
        for (a, v) in acc.iter_mut().zip(f(&x)?) {
            *a = *a + v * weight;
        }
        let mut slot = 0;
        loop {
            if slot == dirs.len() {
                let mut denom = T::from(1.0);
                for (&a, &h) in counts.iter().zip(&dir_steps) {
                    for _ in 0..a {
                        denom = denom * h;
                    }
                }
                return Ok(acc.into_iter().map(|a| a / denom).collect());
            }
            offsets[slot] += 1;
            if offsets[slot] <= counts[slot] {
                break;
            }
            offsets[slot] = 0;
            slot += 1;
        }
    }
}

fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() <= 1 {
        return vec![idx.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..idx.len() {
        if idx[..i].contains(&idx[i]) {
            continue;
        }
        let mut rest = idx.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Reconstructs every tensor at `sample` by finite differences of `F^2`.
pub fn oracle_bundle<M: FinslerMetric>(
    metric: &M,
    sample: &TangentSample,
    cfg: OracleConfig,
    with_douglas: bool,
) -> Result<OracleBundle, CurvatureError> {
    let n = metric.dim();
    if sample.x.len() != n || sample.y.len() != n {
        return Err(CurvatureError::Arity { expected: n, got: sample.x.len().max(sample.y.len()) });
    }
    if !sample.is_admissible(metric) {
        return Err(CurvatureError::Inadmissible);
    }
    let ev = Evaluator { metric, n, cfg, fiber_scale: metric.fiber_step_scale(&sample.x, &sample.y) };
    let z: Vec<Dd> = sample.x.iter().chain(&sample.y).map(|&v| Dd::new(v)).collect();
    let d = |vars: &[usize]| ev.d(&z, vars).map(Dd::to_f64);

    let f_squared = ev.f2(&z)?.to_f64();
    let g = Tensor::from_vec(2, n, ev.metric_at(&z)?.into_iter().map(Dd::to_f64).collect()).expect("square metric");
    let g_inv_v = linalg::inverse(g.data(), n).ok_or(CurvatureError::NotPositiveDefinite(0.0))?;
    let g_inv = Tensor::from_vec(2, n, g_inv_v).expect("square inverse");
    let mut y_lower = Tensor::zeros(1, n);
    for i in 0..n {
        y_lower.set(&[i], 0.5 * d(&[n + i])?);
    }
    let mut cartan = Tensor::zeros(3, n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let v = 0.25 * d(&[n + i, n + j, n + k])?;
                for p in permutations(&[i, j, k]) {
                    cartan.set(&p, v);
                }
            }
        }
    }
    let mean_cartan = Tensor::from_fn(1, n, |ix| {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += g_inv.at2(j, k) * cartan.at3(ix[0], j, k);
            }
        }
        acc
    });
    let angular = angular_metric(&g, &y_lower, f_squared);
    let spray = Tensor::from_vec(1, n, ev.spray_at(&z)?.into_iter().map(Dd::to_f64).collect()).expect("spray length");
    let berwald = ev.spray_fiber_tensor(&z, 3)?;
    let mean_berwald = mean_berwald(&berwald);
    let (mean_berwald_dy, douglas_t) = if with_douglas {
        let fourth = ev.spray_fiber_tensor(&z, 4)?;
        let de = Tensor::from_fn(3, n, |ix| 0.5 * (0..n).map(|m| fourth.get(&[m, ix[0], ix[1], m, ix[2]])).sum::<f64>());
        let dt = douglas(&berwald, &mean_berwald, &de, &sample.y);
        (Some(de), Some(dt))
    } else {
        (None, None)
    };
    let (landsberg, mean_landsberg) = landsberg_and_mean(&berwald, &y_lower, &g_inv);
    let mut dually_flat = Tensor::zeros(1, n);
    for l in 0..n {
        let mut acc = -2.0 * d(&[l])?;
        for k in 0..n {
            acc += d(&[k, n + l])? * sample.y[k];
        }
        dually_flat.set(&[l], acc);
    }
    Ok(OracleBundle {
        f_squared,
        g,
        y_lower,
        cartan,
        mean_cartan,
        angular,
        spray,
        berwald,
        mean_berwald,
        mean_berwald_dy,
        douglas: douglas_t,
        landsberg,
        mean_landsberg,
        dually_flat,
    })
}

/// Tensors compared by [`compare`], with their fiber homogeneity degree.
pub const COMPARED: [(&str, i32); 13] = [
    ("g", 0),
    ("y_lower", 1),
    ("cartan", -1),
    ("mean_cartan", -1),
    ("angular", 0),
    ("spray", 2),
    ("berwald", -1),
    ("mean_berwald", -1),
    ("mean_berwald_dy", -2),
    ("douglas", -1),
    ("landsberg", 0),
    ("mean_landsberg", 0),
    ("dually_flat", 2),
];

/// `(name, jet tensor, oracle tensor)` pairs present in both bundles.
pub fn paired<'a>(jet: &'a CurvatureBundle, fd: &'a OracleBundle) -> Vec<(&'static str, i32, &'a Tensor, &'a Tensor)> {
    let mut out = Vec::new();
    for (name, degree) in COMPARED {
        let pair = match name {
            "g" => Some((&jet.g, &fd.g)),
            "y_lower" => Some((&jet.y_lower, &fd.y_lower)),
            "cartan" => Some((&jet.cartan, &fd.cartan)),
            "mean_cartan" => Some((&jet.mean_cartan, &fd.mean_cartan)),
            "angular" => Some((&jet.angular, &fd.angular)),
            "spray" => Some((&jet.spray, &fd.spray)),
            "berwald" => Some((&jet.berwald, &fd.berwald)),
            "mean_berwald" => Some((&jet.mean_berwald, &fd.mean_berwald)),
            "mean_berwald_dy" => jet.mean_berwald_dy.as_ref().zip(fd.mean_berwald_dy.as_ref()),
            "douglas" => jet.douglas.as_ref().zip(fd.douglas.as_ref()),
            "landsberg" => Some((&jet.landsberg, &fd.landsberg)),
            "mean_landsberg" => Some((&jet.mean_landsberg, &fd.mean_landsberg)),
            "dually_flat" => Some((&jet.dually_flat, &fd.dually_flat)),
            _ => None,
        };
        if let Some((a, b)) = pair {
            out.push((name, degree, a, b));
        }
    }
    out
}

/// `max|a - b| / max(max|a|, max|b|, F^deg)`: relative where the tensor is of natural size,
/// absolute in homogeneity-normalized units where it (nearly) vanishes.
pub fn relative_deviation(a: &Tensor, b: &Tensor, f: f64, degree: i32) -> f64 {
    let floor = libm::pow(f, degree as f64);
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(floor)
}

/// Relative deviation of every paired tensor.
pub fn compare(jet: &CurvatureBundle, fd: &OracleBundle) -> Vec<(&'static str, f64)> {
    let f = libm::sqrt(jet.f_squared);
    paired(jet, fd).into_iter().map(|(name, degree, a, b)| (name, relative_deviation(a, b, f, degree))).collect()
}
