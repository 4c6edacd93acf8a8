//! Seeded draws of admissible tangent samples.

use finsler_core::curvature::{fundamental_tensor, TangentSample};
use finsler_core::metric::{ChartBox, FinslerMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::CliError;
use crate::model::Model;
use crate::scenario::SamplingSpec;

/// Draws inspected before admissibility exhaustion is declared.
pub const EXHAUSTION_DRAWS: usize = 1000;
/// Admissible samples required within [`EXHAUSTION_DRAWS`].
pub const MIN_ADMISSIBLE: usize = 5;
/// Hard cap on draws is this multiple of the requested count (or [`EXHAUSTION_DRAWS`]).
pub const DRAWS_PER_SAMPLE: usize = 20;
/// Each factor's share of a product fiber vector must be at least this fraction of `|y|`.
pub const MIN_FACTOR_SHARE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<TangentSample>,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub requested: usize,
    pub admissible: usize,
    pub draws: usize,
    pub groups: usize,
}

impl SampleSet {
    pub fn summary(&self, requested: usize) -> SamplingSummary {
        let mut groups: Vec<usize> = self.samples.iter().map(|s| s.group).collect();
        groups.dedup();
        SamplingSummary { requested, admissible: self.samples.len(), draws: self.draws, groups: groups.len() }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn base_point(rng: &mut ChaCha8Rng, chart: &ChartBox) -> Vec<f64> {
    chart.lower.iter().zip(&chart.upper).map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect()
}

fn accept(model: &Model, s: &TangentSample) -> bool {
    if let Some(p) = model.product() {
        let (y1, v) = p.split_point(&s.y);
        let total = s.fiber_norm();
        if norm(y1) < MIN_FACTOR_SHARE * total || norm(v) < MIN_FACTOR_SHARE * total {
            return false;
        }
    }
    s.is_admissible(model) && fundamental_tensor(model, s).is_ok()
}

/// Base points uniform in the chart; `fibers_per_point` Gaussian directions per point,
/// normalized and rescaled to the listed norms. Samples at one base point share a group.
pub fn draw(model: &Model, chart: &ChartBox, spec: &SamplingSpec) -> Result<SampleSet, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = model.dim();
    let budget = EXHAUSTION_DRAWS.max(DRAWS_PER_SAMPLE * spec.count);
    let mut samples = Vec::with_capacity(spec.count);
    let mut draws = 0;
    let mut group = 0;
    'outer: while samples.len() < spec.count && draws < budget {
        let x = base_point(&mut rng, chart);
        for k in 0..spec.fibers_per_point {
            if samples.len() == spec.count || draws == budget {
                break 'outer;
            }
            if draws == EXHAUSTION_DRAWS && samples.len() < MIN_ADMISSIBLE.min(spec.count) {
                break 'outer;
            }
            draws += 1;
            let d: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = norm(&d);
            if len <= 1e-12 {
                continue;
            }
            let r = spec.norms[k % spec.norms.len()];
            let scale = if spec.normalize { r / len } else { r };
            let s = TangentSample::new(x.clone(), d.iter().map(|v| v * scale).collect()).with_group(group);
            if accept(model, &s) {
                samples.push(s);
            }
        }
        group += 1;
    }
    let needed = MIN_ADMISSIBLE.min(spec.count);
    if samples.len() < needed {
        return Err(CliError::Exhausted { found: samples.len(), draws, needed });
    }
    Ok(SampleSet { samples, draws })
}
