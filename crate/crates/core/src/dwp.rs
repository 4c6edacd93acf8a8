//! Doubly warped products `F^2 = f2(u)^2 F1(x,y)^2 + f1(x)^2 F2(u,v)^2` and factor-block indexing.
//!
//! Global coordinates are ordered `(x^1..x^n1, u^1..u^n2)` on the base and `(y^1..y^n1, v^1..v^n2)`
//! on the fiber.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::metric::{ChartBox, FactorMetric, FinslerMetric, MetricError, Warping};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gradients of `f^2` larger than this somewhere on the chart make a warping non-constant.
pub const PROPER_GRADIENT_THRESHOLD: f64 = 1e-8;

/// Probe points per axis when deciding whether a warping is constant.
pub const PROPER_GRID_POINTS: usize = 7;

/// Smallest admissible norm of either factor's fiber component.
pub const MIN_FACTOR_FIBER_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    First,
    Second,
}

impl Factor {
    pub fn digit(self) -> char {
        match self {
            Self::First => '1',
            Self::Second => '2',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub global: usize,
    pub factor: Factor,
    pub local: usize,
}

/// Split of `0..n1+n2` into the two factor ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n1: usize,
    pub n2: usize,
}

impl BlockLayout {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    pub fn dim(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn factor_dim(&self, factor: Factor) -> usize {
        match factor {
            Factor::First => self.n1,
            Factor::Second => self.n2,
        }
    }

    pub fn offset(&self, factor: Factor) -> usize {
        match factor {
            Factor::First => 0,
            Factor::Second => self.n1,
        }
    }

    pub fn index(&self, global: usize) -> BlockIndex {
        assert!(global < self.dim(), "global index {global} out of range");
        if global < self.n1 {
            BlockIndex { global, factor: Factor::First, local: global }
        } else {
            BlockIndex { global, factor: Factor::Second, local: global - self.n1 }
        }
    }

    pub fn global(&self, factor: Factor, local: usize) -> usize {
        assert!(local < self.factor_dim(factor), "local index {local} out of range");
        self.offset(factor) + local
    }

    /// All `2^rank` factor patterns of a rank-`rank` tensor in lexicographic order.
    pub fn patterns(rank: usize) -> Vec<Vec<Factor>> {
        (0..1usize << rank)
            .map(|bits| {
                (0..rank).map(|slot| if bits >> (rank - 1 - slot) & 1 == 0 { Factor::First } else { Factor::Second }).collect()
            })
            .collect()
    }
}

/// One factor block of a tensor, indexed by local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub pattern: Vec<Factor>,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Block {
    pub fn zeros(layout: &BlockLayout, pattern: Vec<Factor>) -> Self {
        let shape: Vec<usize> = pattern.iter().map(|f| layout.factor_dim(*f)).collect();
        let len = shape.iter().product();
        Self { pattern, shape, data: vec![0.0; len] }
    }

    fn offset(&self, local: &[usize]) -> usize {
        local.iter().zip(&self.shape).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn get(&self, local: &[usize]) -> f64 {
        self.data[self.offset(local)]
    }

    pub fn set(&mut self, local: &[usize], value: f64) {
        let k = self.offset(local);
        self.data[k] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    /// Pattern label such as `"1211"`.
    pub fn label(&self) -> alloc::string::String {
        self.pattern.iter().map(|f| f.digit()).collect()
    }
}

/// Partitions a tensor over global indices into its `2^rank` factor blocks.
pub fn split_tensor(layout: &BlockLayout, tensor: &Tensor) -> BTreeMap<Vec<Factor>, Block> {
    assert_eq!(tensor.dim(), layout.dim(), "tensor dimension does not match the layout");
    let rank = tensor.rank();
    let mut blocks: BTreeMap<Vec<Factor>, Block> =
        BlockLayout::patterns(rank).into_iter().map(|p| (p.clone(), Block::zeros(layout, p))).collect();
    let mut idx = vec![0usize; rank];
    let mut pattern = vec![Factor::First; rank];
    let mut local = vec![0usize; rank];
    for (k, value) in tensor.data().iter().enumerate() {
        tensor.unflatten(k, &mut idx);
        for slot in 0..rank {
            let b = layout.index(idx[slot]);
            pattern[slot] = b.factor;
            local[slot] = b.local;
        }
        blocks.get_mut(&pattern).expect("all patterns present").set(&local, *value);
    }
    blocks
}

/// Inverse of [`split_tensor`]; missing blocks are treated as zero.
pub fn reassemble(layout: &BlockLayout, rank: usize, blocks: &BTreeMap<Vec<Factor>, Block>) -> Tensor {
    let mut local = vec![0usize; rank];
    let mut pattern = vec![Factor::First; rank];
    Tensor::from_fn(rank, layout.dim(), |idx| {
        for slot in 0..rank {
            let b = layout.index(idx[slot]);
            pattern[slot] = b.factor;
            local[slot] = b.local;
        }
        blocks.get(&pattern).map_or(0.0, |b| b.get(&local))
    })
}

/// The quadruple `(M1, M2, f1, f2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DwpScenario {
    pub m1: FactorMetric,
    pub m2: FactorMetric,
    pub f1: Warping,
    pub f2: Warping,
    chart: ChartBox,
}

impl DwpScenario {
    pub fn new(m1: FactorMetric, m2: FactorMetric, f1: Warping, f2: Warping) -> Result<Self, MetricError> {
        if f1.dim() != m1.dim() {
            return Err(MetricError::Arity { expected: m1.dim(), got: f1.dim() });
        }
        if f2.dim() != m2.dim() {
            return Err(MetricError::Arity { expected: m2.dim(), got: f2.dim() });
        }
        let mut lower = m1.chart().lower.clone();
        lower.extend_from_slice(&m2.chart().lower);
        let mut upper = m1.chart().upper.clone();
        upper.extend_from_slice(&m2.chart().upper);
        let chart = ChartBox { lower, upper };
        Ok(Self { m1, m2, f1, f2, chart })
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.m1.dim(), self.m2.dim())
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    /// Numerical constancy test on the owning factor's chart box.
    pub fn warping_is_constant(&self, factor: Factor) -> Result<bool, MetricError> {
        let (w, chart) = match factor {
            Factor::First => (&self.f1, self.m1.chart()),
            Factor::Second => (&self.f2, self.m2.chart()),
        };
        for x in chart.grid(PROPER_GRID_POINTS) {
            if w.sq_grad(&x)?.iter().any(|g| libm::fabs(*g) > PROPER_GRADIENT_THRESHOLD) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Neither warping is constant.
    pub fn is_proper(&self) -> Result<bool, MetricError> {
        Ok(!self.warping_is_constant(Factor::First)? && !self.warping_is_constant(Factor::Second)?)
    }

    /// Splits a global point into its two factor parts.
    pub fn split_point<'a, T>(&self, z: &'a [T]) -> (&'a [T], &'a [T]) {
        z.split_at(self.m1.dim())
    }

    /// The two summands `(f2^2 F1^2, f1^2 F2^2)` evaluated separately.
    pub fn summands<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<(S, S), MetricError> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(MetricError::Arity { expected: self.dim(), got: x.len().min(y.len()) });
        }
        let (x1, u) = self.split_point(x);
        let (y1, v) = self.split_point(y);
        let f1 = self.f1.eval(&x1[0], x1)?;
        let f2 = self.f2.eval(&u[0], u)?;
        let first = f2.square().mul(&self.m1.f_squared(x1, y1)?);
        let second = f1.square().mul(&self.m2.f_squared(u, v)?);
        Ok((first, second))
    }
}

impl FinslerMetric for DwpScenario {
    fn dim(&self) -> usize {
        self.m1.dim() + self.m2.dim()
    }

    fn f_squared<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, MetricError> {
        let (a, b) = self.summands(x, y)?;
        Ok(a.add(&b))
    }

    fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        if x.len() != self.dim() || y.len() != self.dim() {
            return false;
        }
        let (x1, u) = self.split_point(x);
        let (y1, v) = self.split_point(y);
        let norm = |w: &[f64]| libm::sqrt(w.iter().map(|c| c * c).sum());
        // F^2 is only smooth where both fiber components are nonzero
        norm(y1) > MIN_FACTOR_FIBER_NORM
            && norm(v) > MIN_FACTOR_FIBER_NORM
            && self.m1.is_admissible(x1, y1)
            && self.m2.is_admissible(u, v)
            && self.f1.value(x1).is_ok()
            && self.f2.value(u).is_ok()
    }

    fn is_quadratic(&self) -> bool {
        self.m1.is_quadratic() && self.m2.is_quadratic()
    }

    /// The shortest fiber component of a non-quadratic factor: `F^2` is singular where it vanishes.
    fn fiber_step_scale(&self, x: &[f64], y: &[f64]) -> f64 {
        let (x1, u) = self.split_point(x);
        let (y1, v) = self.split_point(y);
        let mut scale = libm::sqrt(y.iter().map(|c| c * c).sum());
        for (m, xs, ys) in [(&self.m1, x1, y1), (&self.m2, u, v)] {
            if !m.is_quadratic() {
                scale = scale.min(m.fiber_step_scale(xs, ys));
            }
        }
        scale
    }
}
