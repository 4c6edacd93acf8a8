//! Closed-form curvature blocks of a doubly warped product built from factor-level data.
//!
//! Notation: for a factor `A` with warping `f_A`, `W_A` is the vector field
//! `W^k(y) = g_A^{kh}(y) d(f_A^2)/dx^h`, and `W_A[m]` its `m`-th fiber derivative
//! `d^m W^k / dy^c1 .. dy^cm`. Index lowering (`y_i`, `v_beta`) uses the owning factor's
//! fundamental tensor.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::curvature::{self, compute_bundle, BundleOptions, CurvatureBundle, CurvatureError, TangentSample};
use crate::dwp::{reassemble, split_tensor, Block, BlockLayout, DwpScenario, Factor};
use crate::jet::jet_matrix_inverse;
use crate::metric::{FactorMetric, FinslerMetric, Warping};
use crate::tensor::Tensor;

/// Highest fiber-derivative order of `g^{ab}` any block needs.
pub const INVERSE_METRIC_ORDER: usize = 4;

pub type Blocks = BTreeMap<Vec<Factor>, Block>;

/// `d^m g^{ab} / dy^c1..dy^cm` for `m = 0..=max_order`, as tensors `[a, b, c1, .., cm]`.
pub fn inverse_metric_y_jets<M: FinslerMetric>(
    metric: &M,
    sample: &TangentSample,
    max_order: usize,
) -> Result<Vec<Tensor>, CurvatureError> {
    let n = metric.dim();
    let (p, fiber) = curvature::f_squared_jet(metric, sample, max_order + 2, false)?;
    let inv = jet_matrix_inverse(&curvature::metric_jets(&p, n, fiber)?)?;
    let mut out = Vec::with_capacity(max_order + 1);
    for m in 0..=max_order {
        let mut t = Tensor::zeros(m + 2, n);
        let mut idx = alloc::vec![0usize; m + 2];
        for k in 0..t.len() {
            t.unflatten(k, &mut idx);
            let v = inv.get(idx[0], idx[1]).partial(&idx[2..])?;
            t.set(&idx, v);
        }
        out.push(t);
    }
    Ok(out)
}

/// Everything the block formulas need from one factor at its sub-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorData {
    pub bundle: CurvatureBundle,
    /// `f^2` of this factor's own warping.
    pub warp_sq: f64,
    pub warp_grad: Vec<f64>,
    pub warp_sq_grad: Vec<f64>,
    pub inverse_metric_dy: Vec<Tensor>,
    /// `W[m]` for `m = 0..=4`, rank `m + 1`.
    pub coupling: Vec<Tensor>,
    t1: f64,
    t2: Tensor,
    t3: Tensor,
    t4: Tensor,
    y_w1: Tensor,
    y_w2: Tensor,
    y_w3: Tensor,
    /// `y^h d(f^2)/dx^h` with the raw fiber vector.
    y_dot_grad: f64,
}

impl FactorData {
    pub fn new(metric: &FactorMetric, warping: &Warping, sample: &TangentSample) -> Result<Self, CurvatureError> {
        let bundle = compute_bundle(metric, sample, BundleOptions { douglas: true })?;
        let (f, warp_grad) = warping.value_and_grad(&sample.x)?;
        let warp_sq_grad: Vec<f64> = warp_grad.iter().map(|g| 2.0 * f * g).collect();
        let inverse_metric_dy = inverse_metric_y_jets(metric, sample, INVERSE_METRIC_ORDER)?;
        let coupling: Vec<Tensor> = inverse_metric_dy.iter().map(|t| t.contract(1, &warp_sq_grad)).collect();
        let n = metric.dim();
        let w = &coupling;
        let t1 = (0..n).map(|k| w[1].at2(k, k)).sum();
        let t2 = Tensor::from_fn(1, n, |i| (0..n).map(|m| w[2].at3(m, i[0], m)).sum());
        let t3 = Tensor::from_fn(2, n, |i| (0..n).map(|m| w[3].at4(m, i[0], i[1], m)).sum());
        let t4 = Tensor::from_fn(3, n, |i| (0..n).map(|m| w[4].get(&[m, i[0], i[1], m, i[2]])).sum());
        let yl = bundle.y_lower.data().to_vec();
        let y_w1 = w[1].contract(0, &yl);
        let y_w2 = w[2].contract(0, &yl);
        let y_w3 = w[3].contract(0, &yl);
        let y_dot_grad = sample.y.iter().zip(&warp_sq_grad).map(|(a, b)| a * b).sum();
        Ok(Self {
            bundle,
            warp_sq: f * f,
            warp_grad,
            warp_sq_grad,
            inverse_metric_dy,
            coupling,
            t1,
            t2,
            t3,
            t4,
            y_w1,
            y_w2,
            y_w3,
            y_dot_grad,
        })
    }

    pub fn dim(&self) -> usize {
        self.bundle.dim()
    }

    fn f_squared(&self) -> f64 {
        self.bundle.f_squared
    }

    fn g(&self, a: usize, b: usize) -> f64 {
        self.bundle.g.at2(a, b)
    }

    fn y_lower(&self, a: usize) -> f64 {
        self.bundle.y_lower.at1(a)
    }
}

/// Factor data of both factors at the sub-samples of one DWP sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub layout: BlockLayout,
    pub first: FactorData,
    pub second: FactorData,
    pub sample: TangentSample,
}

impl FactorPair {
    pub fn new(scenario: &DwpScenario, sample: &TangentSample) -> Result<Self, CurvatureError> {
        let layout = scenario.layout();
        if sample.x.len() != layout.dim() || sample.y.len() != layout.dim() {
            return Err(CurvatureError::Arity { expected: layout.dim(), got: sample.x.len() });
        }
        let (x1, x2) = sample.x.split_at(layout.n1);
        let (y1, y2) = sample.y.split_at(layout.n1);
        let first = FactorData::new(&scenario.m1, &scenario.f1, &TangentSample::new(x1.to_vec(), y1.to_vec()))?;
        let second = FactorData::new(&scenario.m2, &scenario.f2, &TangentSample::new(x2.to_vec(), y2.to_vec()))?;
        Ok(Self { layout, first, second, sample: sample.clone() })
    }

    fn data(&self, f: Factor) -> &FactorData {
        match f {
            Factor::First => &self.first,
            Factor::Second => &self.second,
        }
    }

    fn other(f: Factor) -> Factor {
        match f {
            Factor::First => Factor::Second,
            Factor::Second => Factor::First,
        }
    }

    fn global_tensor(&self, rank: usize, mut f: impl FnMut(&[(Factor, usize)]) -> f64) -> Tensor {
        let mut split = alloc::vec![(Factor::First, 0usize); rank];
        Tensor::from_fn(rank, self.layout.dim(), |idx| {
            for (slot, g) in idx.iter().enumerate() {
                let b = self.layout.index(*g);
                split[slot] = (b.factor, b.local);
            }
            f(&split)
        })
    }

    fn berwald_component(&self, idx: &[(Factor, usize)]) -> f64 {
        let (own, k) = idx[0];
        let a = self.data(own);
        let b = self.data(Self::other(own));
        let mut mine = [0usize; 3];
        let mut theirs = [0usize; 3];
        let (mut nm, mut nt) = (0, 0);
        for &(f, i) in &idx[1..] {
            if f == own {
                mine[nm] = i;
                nm += 1;
            } else {
                theirs[nt] = i;
                nt += 1;
            }
        }
        let w = &a.coupling;
        let s = b.warp_sq;
        match nt {
            0 => a.bundle.berwald.at4(k, mine[0], mine[1], mine[2]) - w[3].at4(k, mine[0], mine[1], mine[2]) * b.f_squared() / (4.0 * s),
            1 => -w[2].at3(k, mine[0], mine[1]) * 2.0 * b.y_lower(theirs[0]) / (4.0 * s),
            2 => -w[1].at2(k, mine[0]) * b.g(theirs[0], theirs[1]) / (2.0 * s),
            _ => -w[0].at1(k) * b.bundle.cartan.at3(theirs[0], theirs[1], theirs[2]) / s,
        }
    }

    fn mean_berwald_component(&self, idx: &[(Factor, usize)]) -> f64 {
        let (fi, i) = idx[0];
        let (fj, j) = idx[1];
        if fi == fj {
            let a = self.data(fi);
            let b = self.data(Self::other(fi));
            a.bundle.mean_berwald.at2(i, j)
                - a.t3.at2(i, j) * b.f_squared() / (8.0 * b.warp_sq)
                - a.g(i, j) * b.t1 / (4.0 * a.warp_sq)
        } else {
            let a = self.data(fi);
            let b = self.data(fj);
            -a.t2.at1(i) * b.y_lower(j) / (4.0 * b.warp_sq) - b.t2.at1(j) * a.y_lower(i) / (4.0 * a.warp_sq)
        }
    }

    /// `dE_JK / dY^L`.
    fn mean_berwald_dy_component(&self, idx: &[(Factor, usize)]) -> f64 {
        let (fj, j) = idx[0];
        let (fk, k) = idx[1];
        let (fl, l) = idx[2];
        if fj == fk {
            let a = self.data(fj);
            let b = self.data(Self::other(fj));
            let de = a.bundle.mean_berwald_dy.as_ref().expect("factor bundles carry dE");
            if fl == fj {
                de.at3(j, k, l)
                    - a.t4.at3(j, k, l) * b.f_squared() / (8.0 * b.warp_sq)
                    - 2.0 * a.bundle.cartan.at3(j, k, l) * b.t1 / (4.0 * a.warp_sq)
            } else {
                -a.t3.at2(j, k) * 2.0 * b.y_lower(l) / (8.0 * b.warp_sq) - a.g(j, k) * b.t2.at1(l) / (4.0 * a.warp_sq)
            }
        } else {
            // the index sharing the factor of L is i, the other one beta
            let (i, beta) = if fj == fl { (j, k) } else { (k, j) };
            let x = self.data(fl);
            let y = self.data(Self::other(fl));
            -x.t3.at2(i, l) * y.y_lower(beta) / (4.0 * y.warp_sq) - y.t2.at1(beta) * x.g(i, l) / (4.0 * x.warp_sq)
        }
    }

    fn landsberg_component(&self, idx: &[(Factor, usize)]) -> f64 {
        let firsts = idx.iter().filter(|(f, _)| *f == Factor::First).count();
        let own = if firsts >= 2 { Factor::First } else { Factor::Second };
        let a = self.data(own);
        let b = self.data(Self::other(own));
        let mine: Vec<usize> = idx.iter().filter(|(f, _)| *f == own).map(|(_, i)| *i).collect();
        if mine.len() == 3 {
            let (i, j, k) = (mine[0], mine[1], mine[2]);
            b.warp_sq * a.bundle.landsberg.at3(i, j, k)
                + a.y_w3.at3(i, j, k) * b.f_squared() / 8.0
                + 0.5 * a.bundle.cartan.at3(i, j, k) * b.y_dot_grad
        } else {
            let lambda = idx.iter().find(|(f, _)| *f != own).map(|(_, i)| *i).expect("one index in the other factor");
            let (i, j) = (mine[0], mine[1]);
            0.25 * a.y_w2.at2(i, j) * b.y_lower(lambda) + 0.25 * a.g(i, j) * b.y_w1.at1(lambda)
        }
    }

    /// Inverse of the DWP fundamental tensor, block diagonal with blocks `g_A^{-1} / f_B^2`.
    fn total_inverse_metric(&self) -> Tensor {
        self.global_tensor(2, |ix| {
            let ((fa, a), (fb, b)) = (ix[0], ix[1]);
            if fa != fb {
                return 0.0;
            }
            let own = self.data(fa);
            own.bundle.g_inv.at2(a, b) / self.data(Self::other(fa)).warp_sq
        })
    }

    pub fn berwald_tensor(&self) -> Tensor {
        self.global_tensor(4, |ix| self.berwald_component(ix))
    }

    pub fn mean_berwald_tensor(&self) -> Tensor {
        self.global_tensor(2, |ix| self.mean_berwald_component(ix))
    }

    pub fn mean_berwald_dy_tensor(&self) -> Tensor {
        self.global_tensor(3, |ix| self.mean_berwald_dy_component(ix))
    }

    pub fn douglas_tensor(&self) -> Tensor {
        curvature::douglas(&self.berwald_tensor(), &self.mean_berwald_tensor(), &self.mean_berwald_dy_tensor(), &self.sample.y)
    }

    pub fn landsberg_tensor(&self) -> Tensor {
        self.global_tensor(3, |ix| self.landsberg_component(ix))
    }

    pub fn mean_landsberg_tensor(&self) -> Tensor {
        curvature::trace_last_two(&self.landsberg_tensor(), &self.total_inverse_metric())
    }

    /// `D^gamma_ijk y^k - 2/(n+1) v^gamma (E_ij - 3/(8 f2^2) sum_m W3^m_ijm F2^2)` and its mirror;
    /// returns the largest component.
    pub fn douglas_contraction_residual(&self) -> f64 {
        let d = self.douglas_tensor();
        let n = self.layout.dim() as f64;
        let mut worst = 0.0f64;
        for own in [Factor::First, Factor::Second] {
            let a = self.data(own);
            let b = self.data(Self::other(own));
            let other = Self::other(own);
            let y_own: Vec<f64> = a.bundle.sample.y.clone();
            for gamma in 0..b.dim() {
                for i in 0..a.dim() {
                    for j in 0..a.dim() {
                        let mut lhs = 0.0;
                        for (k, yk) in y_own.iter().enumerate() {
                            lhs += yk
                                * d.at4(
                                    self.layout.global(other, gamma),
                                    self.layout.global(own, i),
                                    self.layout.global(own, j),
                                    self.layout.global(own, k),
                                );
                        }
                        let bracket = a.bundle.mean_berwald.at2(i, j) - 3.0 * a.t3.at2(i, j) * b.f_squared() / (8.0 * b.warp_sq);
                        let rhs = 2.0 / (n + 1.0) * b.bundle.sample.y[gamma] * bracket;
                        worst = worst.max(libm::fabs(lhs - rhs));
                    }
                }
            }
        }
        worst
    }
}

pub fn berwald_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.berwald_tensor())
}

pub fn mean_berwald_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.mean_berwald_tensor())
}

pub fn mean_berwald_dy_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.mean_berwald_dy_tensor())
}

pub fn douglas_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.douglas_tensor())
}

pub fn landsberg_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.landsberg_tensor())
}

pub fn mean_landsberg_blocks(pair: &FactorPair) -> Blocks {
    split_tensor(&pair.layout, &pair.mean_landsberg_tensor())
}

/// Block labels displayed explicitly for each family (the rest follow by symmetry of the lower slots).
pub const BERWALD_BLOCKS: [&str; 8] = ["1111", "1121", "1221", "1222", "2222", "2122", "2112", "2111"];
pub const MEAN_BERWALD_BLOCKS: [&str; 3] = ["22", "11", "12"];
pub const DOUGLAS_BLOCKS: [&str; 8] = BERWALD_BLOCKS;
pub const LANDSBERG_BLOCKS: [&str; 4] = ["111", "112", "122", "222"];
pub const MEAN_LANDSBERG_BLOCKS: [&str; 2] = ["1", "2"];

/// Looks up a block by its label such as `"1121"`.
pub fn block<'a>(blocks: &'a Blocks, label: &str) -> Option<&'a Block> {
    let pattern: Option<Vec<Factor>> = label
        .chars()
        .map(|c| match c {
            '1' => Some(Factor::First),
            '2' => Some(Factor::Second),
            _ => None,
        })
        .collect();
    blocks.get(&pattern?)
}

/// Reassembles blocks into a global tensor.
pub fn assemble(layout: &BlockLayout, rank: usize, blocks: &Blocks) -> Tensor {
    reassemble(layout, rank, blocks)
}

/// Coupling diagnostics between the inverse fundamental tensor of one factor and its warping.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerms {
    /// `dg^{kh}/dy^l d(f^2)/dx^h`, indexed `[k, l]`.
    pub berwald: Tensor,
    /// `dg^{kh}/dy^k d(f^2)/dx^h`.
    pub mean_berwald_trace: f64,
    /// `y_l d^3 g^{lh}/dy^i dy^j dy^k df/dx^h`, indexed `[i, j, k]`.
    pub landsberg: Tensor,
    /// `-2 dg^{hj}/dy^k df/dx^h`, indexed `[j, k]`.
    pub cartan_literal: Tensor,
    /// `g^{ha} g^{jb} C_abk df/dx^h`, indexed `[j, k]`.
    pub cartan_conventional: Tensor,
    /// `y_l d^3 g^{lh}/dy^a dy^b dy^c g^{bc} d(f^2)/dx^h`, indexed `[a]`.
    pub mean_landsberg: Tensor,
}

impl CouplingTerms {
    pub fn of(data: &FactorData) -> Self {
        let n = data.dim();
        let gd = &data.inverse_metric_dy;
        let grad = &data.warp_grad;
        let yl = data.bundle.y_lower.data();
        let berwald = data.coupling[1].clone();
        let landsberg = gd[3].contract(1, grad).contract(0, yl);
        let cartan_literal = gd[1].contract(0, grad).scaled(-2.0);
        let g_inv = &data.bundle.g_inv;
        let c = &data.bundle.cartan;
        let cartan_conventional = Tensor::from_fn(2, n, |ix| {
            let (j, k) = (ix[0], ix[1]);
            let mut acc = 0.0;
            for h in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        acc += g_inv.at2(h, a) * g_inv.at2(j, b) * c.at3(a, b, k) * grad[h];
                    }
                }
            }
            acc
        });
        let mean_landsberg = curvature::trace_last_two(&data.y_w3, g_inv);
        Self { berwald, mean_berwald_trace: data.t1, landsberg, cartan_literal, cartan_conventional, mean_landsberg }
    }

    /// `(name, max-abs)` pairs rescaled to fiber degree zero with the factor's `F`; names carry
    /// the factor suffix `_1` or `_2`.
    pub fn scaled_norms(&self, f: f64, suffix: &str) -> Vec<(alloc::string::String, f64)> {
        let degrees = [1, 1, 2, 1, 1, 2];
        self.norms(suffix).into_iter().zip(degrees).map(|((name, v), d)| (name, v * libm::pow(f, d as f64))).collect()
    }

    /// `(name, max-abs)` pairs; names carry the factor suffix `_1` or `_2`.
    pub fn norms(&self, suffix: &str) -> Vec<(alloc::string::String, f64)> {
        use alloc::format;
        alloc::vec![
            (format!("berwald_wp_{suffix}"), self.berwald.max_abs()),
            (format!("mean_berwald_trace_{suffix}"), libm::fabs(self.mean_berwald_trace)),
            (format!("landsberg_{suffix}"), self.landsberg.max_abs()),
            (format!("cartan_literal_{suffix}"), self.cartan_literal.max_abs()),
            (format!("cartan_conventional_{suffix}"), self.cartan_conventional.max_abs()),
            (format!("mean_landsberg_{suffix}"), self.mean_landsberg.max_abs()),
        ]
    }
}

/// Coupling diagnostics of both factors, keyed by name.
pub fn warping_coupling_terms(pair: &FactorPair) -> BTreeMap<alloc::string::String, f64> {
    let mut out = BTreeMap::new();
    out.extend(CouplingTerms::of(&pair.first).norms("1"));
    out.extend(CouplingTerms::of(&pair.second).norms("2"));
    out
}

/// As [`warping_coupling_terms`], rescaled to fiber degree zero.
pub fn scaled_coupling_terms(pair: &FactorPair) -> BTreeMap<alloc::string::String, f64> {
    let mut out = BTreeMap::new();
    out.extend(CouplingTerms::of(&pair.first).scaled_norms(libm::sqrt(pair.first.bundle.f_squared), "1"));
    out.extend(CouplingTerms::of(&pair.second).scaled_norms(libm::sqrt(pair.second.bundle.f_squared), "2"));
    out
}

/// Max-abs difference between one closed-form block and the split engine tensor.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlockAgreement {
    pub family: &'static str,
    pub block: alloc::string::String,
    pub diff: f64,
}

/// Compares every closed-form block against `engine` (a bundle of the assembled DWP at the same sample).
pub fn block_agreement(pair: &FactorPair, engine: &CurvatureBundle) -> Vec<BlockAgreement> {
    let layout = &pair.layout;
    let mut families: Vec<(&'static str, Blocks, &Tensor)> = alloc::vec![
        ("berwald", berwald_blocks(pair), &engine.berwald),
        ("mean_berwald", mean_berwald_blocks(pair), &engine.mean_berwald),
        ("landsberg", landsberg_blocks(pair), &engine.landsberg),
        ("mean_landsberg", mean_landsberg_blocks(pair), &engine.mean_landsberg),
    ];
    if let (Some(de), Some(d)) = (&engine.mean_berwald_dy, &engine.douglas) {
        families.push(("mean_berwald_dy", mean_berwald_dy_blocks(pair), de));
        families.push(("douglas", douglas_blocks(pair), d));
    }
    let mut out = Vec::new();
    for (family, closed, tensor) in families {
        let split = split_tensor(layout, tensor);
        for (pattern, block) in &closed {
            let diff = split[pattern].data.iter().zip(&block.data).fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
            out.push(BlockAgreement { family, block: block.label(), diff });
        }
    }
    out
}

/// Block residuals of a product with both warpings equal to one: `pure` blocks against the
/// factor tensor, `mixed` blocks against zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DegenerationResidual {
    pub tensor: &'static str,
    pub block: alloc::string::String,
    pub mixed: bool,
    pub value: f64,
}

/// Splits the DWP bundle at `sample` and compares it block by block with the factor bundles.
/// The angular metric and the Douglas tensor carry the total `F^2` and dimension, so they do not
/// reduce blockwise and are left out.
pub fn degeneration_residuals(scenario: &DwpScenario, sample: &TangentSample) -> Result<Vec<DegenerationResidual>, CurvatureError> {
    let layout = scenario.layout();
    let total = compute_bundle(scenario, sample, BundleOptions { douglas: false })?;
    let (x1, x2) = sample.x.split_at(layout.n1);
    let (y1, y2) = sample.y.split_at(layout.n1);
    let b1 = compute_bundle(&scenario.m1, &TangentSample::new(x1.to_vec(), y1.to_vec()), BundleOptions { douglas: false })?;
    let b2 = compute_bundle(&scenario.m2, &TangentSample::new(x2.to_vec(), y2.to_vec()), BundleOptions { douglas: false })?;
    let pick = |b: &CurvatureBundle, name: &str| -> Tensor {
        match name {
            "g" => b.g.clone(),
            "g_inv" => b.g_inv.clone(),
            "cartan" => b.cartan.clone(),
            "mean_cartan" => b.mean_cartan.clone(),
            "spray" => b.spray.clone(),
            "berwald" => b.berwald.clone(),
            "mean_berwald" => b.mean_berwald.clone(),
            "landsberg" => b.landsberg.clone(),
            "mean_landsberg" => b.mean_landsberg.clone(),
            _ => b.dually_flat.clone(),
        }
    };
    let mut out = Vec::new();
    for name in ["g", "g_inv", "cartan", "mean_cartan", "spray", "berwald", "mean_berwald", "landsberg", "mean_landsberg", "dually_flat"] {
        let t = pick(&total, name);
        for (pattern, block) in split_tensor(&layout, &t) {
            let mixed = pattern.iter().any(|f| *f != pattern[0]);
            let value = if mixed {
                block.max_abs()
            } else {
                let factor = if pattern[0] == Factor::First { &b1 } else { &b2 };
                pick(factor, name).max_abs_diff(&Tensor::from_vec(pattern.len(), block.shape[0], block.data.clone()).expect("block shape"))
            };
            out.push(DegenerationResidual { tensor: name, block: block.label(), mixed, value });
        }
    }
    Ok(out)
}
