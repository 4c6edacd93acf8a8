use finsler_core::dwp::DwpScenario;
use finsler_core::metric::{ChartBox, FactorMetric, FinslerMetric, MetricError};
use finsler_core::scalar::Scalar;

/// The metric a scenario describes: one factor on its own, or a doubly warped product.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Single(FactorMetric),
    Product(Box<DwpScenario>),
}

impl Model {
    pub fn product(&self) -> Option<&DwpScenario> {
        match self {
            Self::Product(p) => Some(p),
            Self::Single(_) => None,
        }
    }

    /// Sampling chart: the factor chart, or the product of both factor charts.
    pub fn chart(&self) -> &ChartBox {
        match self {
            Self::Single(m) => m.chart(),
            Self::Product(p) => p.chart(),
        }
    }
}

impl FinslerMetric for Model {
    fn dim(&self) -> usize {
        match self {
            Self::Single(m) => m.dim(),
            Self::Product(p) => p.dim(),
        }
    }

    fn f_squared<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, MetricError> {
        match self {
            Self::Single(m) => m.f_squared(x, y),
            Self::Product(p) => p.f_squared(x, y),
        }
    }

    fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        match self {
            Self::Single(m) => m.is_admissible(x, y),
            Self::Product(p) => p.is_admissible(x, y),
        }
    }

    fn is_quadratic(&self) -> bool {
        match self {
            Self::Single(m) => m.is_quadratic(),
            Self::Product(p) => p.is_quadratic(),
        }
    }

    fn fiber_step_scale(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Single(m) => m.fiber_step_scale(x, y),
            Self::Product(p) => p.fiber_step_scale(x, y),
        }
    }
}
