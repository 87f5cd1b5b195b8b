use alloc::vec::Vec;

use crate::latency::LatencyModel;

use super::search::{discretize, stage1_search, stage2_train, SearchBudget, TrainBudget};
use super::space::{DiscreteArch, SearchSpace};
use super::surrogate::Evaluator;
use super::NasError;

/// A (latency, loss) trade-off; both objectives are minimized.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub latency_ms: f64,
    pub track_loss: f64,
    pub arch: DiscreteArch,
    pub lambda_used: f64,
}

impl ParetoPoint {
    /// A point with no architecture attached.
    pub fn bare(latency_ms: f64, track_loss: f64) -> Self {
        Self {
            latency_ms,
            track_loss,
            arch: DiscreteArch::new(Vec::new()),
            lambda_used: 0.0,
        }
    }
}

pub fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.latency_ms <= b.latency_ms
        && a.track_loss <= b.track_loss
        && (a.latency_ms < b.latency_ms || a.track_loss < b.track_loss)
}

/// Non-dominated subset sorted by latency, one representative per distinct
/// coordinate pair (the first in input order).
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.latency_ms
            .total_cmp(&pb.latency_ms)
            .then(pa.track_loss.total_cmp(&pb.track_loss))
            .then(a.cmp(&b))
    });
    // Sweep by latency; a point survives iff its loss beats every earlier one.
    let mut front: Vec<ParetoPoint> = Vec::new();
    let mut best_loss = f64::INFINITY;
    for i in order {
        let p = &points[i];
        if p.track_loss < best_loss {
            best_loss = p.track_loss;
            front.push(p.clone());
        }
    }
    front
}

/// Area dominated by `points` and bounded by `reference` (both objectives
/// minimized). Points beyond the reference contribute nothing.
pub fn hypervolume_2d(points: &[ParetoPoint], reference: (f64, f64)) -> f64 {
    let front = pareto_front(points);
    let mut area = 0.0;
    let mut prev_loss = reference.1;
    for p in front {
        if p.latency_ms >= reference.0 || p.track_loss >= prev_loss {
            continue;
        }
        area += (reference.0 - p.latency_ms) * (prev_loss - p.track_loss);
        prev_loss = p.track_loss;
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepBudget {
    pub search: SearchBudget,
    pub train: TrainBudget,
}

/// One stage-1 / discretize / stage-2 pass at a single `lambda`.
pub fn sweep_point(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambda: f64,
    budget: &SweepBudget,
    seed: u64,
) -> Result<ParetoPoint, NasError> {
    let stage1 = stage1_search(space, evaluator, model, lambda, &budget.search, seed)?;
    let arch = discretize(&stage1.arch, space)?;
    let stage2 = stage2_train(&arch, space, evaluator, &budget.train, seed)?;
    Ok(ParetoPoint {
        latency_ms: model.discrete(&arch.choices),
        track_loss: stage2.val_loss,
        arch,
        lambda_used: lambda,
    })
}

/// Every successful [`sweep_point`] in `lambdas` order. Failing values are
/// skipped with a warning.
pub fn sweep_points(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambdas: &[f64],
    budget: &SweepBudget,
    seed: u64,
) -> Result<Vec<ParetoPoint>, NasError> {
    if lambdas.is_empty() {
        return Err(NasError::EmptyLambdas);
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        match sweep_point(space, evaluator, model, lambda, budget, seed) {
            Ok(p) => out.push(p),
            Err(e) => log::warn!("skipping lambda={lambda}: {e}"),
        }
    }
    Ok(out)
}

/// Pareto front of a λ sweep.
pub fn pareto_sweep(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambdas: &[f64],
    budget: &SweepBudget,
    seed: u64,
) -> Result<Vec<ParetoPoint>, NasError> {
    Ok(pareto_front(&sweep_points(
        space, evaluator, model, lambdas, budget, seed,
    )?))
}
