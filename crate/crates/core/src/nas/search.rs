//! Two-stage search: latency-penalized architecture search followed by
//! latency-free training of the discretized architecture.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::latency::{softmax_weights, ArchLogits, LatencyModel};

use super::space::{DiscreteArch, SearchSpace};
use super::surrogate::{Evaluator, Split};
use super::NasError;

/// Stage-one schedule. Each epoch takes one architecture step followed by
/// `inner_iters` parameter steps, then evaluates on the validation split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub epochs: u32,
    pub inner_iters: u32,
    pub alpha_lr: f64,
    pub theta_lr: f64,
    /// Stop once an architecture step moves no logit by more than this.
    pub tolerance: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            epochs: 50,
            inner_iters: 10,
            alpha_lr: 0.05,
            theta_lr: 0.01,
            tolerance: 0.0,
        }
    }
}

/// Stage-two schedule; validation runs every `eval_interval` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainBudget {
    pub iters: u32,
    pub lr: f64,
    pub eval_interval: u32,
}

impl Default for TrainBudget {
    fn default() -> Self {
        Self {
            iters: 200,
            lr: 0.01,
            eval_interval: 10,
        }
    }
}

/// Seed-derived starting logits: uniform in `[-1e-3, 1e-3]`.
pub fn initial_logits(space: &SearchSpace, seed: u64) -> ArchLogits {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let ops = space.candidate_ops().len();
    ArchLogits::new(
        (0..space.logit_count())
            .map(|_| (0..ops).map(|_| rng.gen_range(-1e-3..1e-3)).collect())
            .collect(),
    )
}

/// Seed-derived starting parameters: uniform in `[-1, 1]`.
pub fn initial_params(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn normalizer(model: &LatencyModel) -> Result<f64, NasError> {
    let max = model.max_latency();
    if max > 0.0 && max.is_finite() {
        Ok(max)
    } else {
        Err(NasError::DegenerateLatency(max))
    }
}

fn check_lambda(lambda: f64) -> Result<(), NasError> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(NasError::InvalidLambda(lambda))
    }
}

/// `L_track + λ · Lat(α) / Lat_max`, where `Lat_max` is the latency of the
/// most expensive discrete architecture.
pub fn total_loss(
    arch: &ArchLogits,
    params: &[f64],
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambda: f64,
    split: Split,
) -> Result<f64, NasError> {
    check_lambda(lambda)?;
    let weights = arch.weights()?;
    let track = evaluator.loss(&weights, params, split);
    if lambda == 0.0 {
        return Ok(track);
    }
    Ok(track + lambda * model.weighted(&weights) / normalizer(model)?)
}

/// Total loss and its gradient with respect to the logits and parameters.
pub struct TotalGradient {
    pub loss: f64,
    pub grad_logits: Vec<Vec<f64>>,
    pub grad_params: Vec<f64>,
}

pub fn total_loss_gradient(
    arch: &ArchLogits,
    params: &[f64],
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambda: f64,
    split: Split,
) -> Result<TotalGradient, NasError> {
    check_lambda(lambda)?;
    let weights = arch.weights()?;
    let eval = evaluator.evaluate(&weights, params, split);
    let (loss, scale) = if lambda == 0.0 {
        (eval.loss, 0.0)
    } else {
        let max = normalizer(model)?;
        (eval.loss + lambda * model.weighted(&weights) / max, lambda / max)
    };
    let coeff = model.coefficients();
    let grad_logits = weights
        .iter()
        .enumerate()
        .map(|(e, w)| {
            // dL/dw, then through the softmax Jacobian: w_k (g_k - Σ w g)
            let g: Vec<f64> = (0..w.len())
                .map(|k| eval.grad_weights[e][k] + scale * coeff[e][k])
                .collect();
            let mean: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
            w.iter().zip(&g).map(|(wk, gk)| wk * (gk - mean)).collect()
        })
        .collect();
    Ok(TotalGradient {
        loss,
        grad_logits,
        grad_params: eval.grad_params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Result {
    pub arch: ArchLogits,
    pub params: Vec<f64>,
    pub val_loss: f64,
    pub best_epoch: u32,
    pub epochs_run: u32,
}

/// Architecture search under the latency-penalized loss. Returns the logits
/// of the epoch with the lowest validation total loss.
pub fn stage1_search(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambda: f64,
    budget: &SearchBudget,
    seed: u64,
) -> Result<Stage1Result, NasError> {
    stage1_search_from(
        initial_logits(space, seed),
        initial_params(evaluator.param_count(), seed),
        evaluator,
        model,
        lambda,
        budget,
    )
}

/// [`stage1_search`] from explicit starting logits and parameters.
pub fn stage1_search_from(
    mut arch: ArchLogits,
    mut params: Vec<f64>,
    evaluator: &dyn Evaluator,
    model: &LatencyModel,
    lambda: f64,
    budget: &SearchBudget,
) -> Result<Stage1Result, NasError> {
    if budget.epochs == 0 {
        return Err(NasError::InvalidBudget("stage 1 needs at least one epoch"));
    }
    let mut best: Option<Stage1Result> = None;
    let mut epochs_run = 0;
    for epoch in 0..budget.epochs {
        epochs_run = epoch + 1;
        let grad = total_loss_gradient(&arch, &params, evaluator, model, lambda, Split::Train)?;
        if !grad.loss.is_finite() {
            return Err(NasError::Diverged { stage: 1, epoch });
        }
        let mut max_step = 0.0f64;
        for (row, g) in arch.edges.iter_mut().zip(&grad.grad_logits) {
            for (a, gk) in row.iter_mut().zip(g) {
                let step = budget.alpha_lr * gk;
                *a -= step;
                max_step = max_step.max(step.abs());
            }
        }
        if arch.edges.iter().flatten().any(|a| !a.is_finite()) {
            return Err(NasError::Diverged { stage: 1, epoch });
        }

        for _ in 0..budget.inner_iters {
            let grad = total_loss_gradient(&arch, &params, evaluator, model, lambda, Split::Train)?;
            if !grad.loss.is_finite() {
                return Err(NasError::Diverged { stage: 1, epoch });
            }
            for (p, g) in params.iter_mut().zip(&grad.grad_params) {
                *p -= budget.theta_lr * g;
            }
        }

        let val = total_loss(&arch, &params, evaluator, model, lambda, Split::Val)?;
        if !val.is_finite() {
            return Err(NasError::Diverged { stage: 1, epoch });
        }
        if best.as_ref().is_none_or(|b| val < b.val_loss) {
            best = Some(Stage1Result {
                arch: arch.clone(),
                params: params.clone(),
                val_loss: val,
                best_epoch: epoch,
                epochs_run: 0,
            });
        }
        if max_step <= budget.tolerance {
            break;
        }
    }
    let mut best = best.expect("at least one epoch ran");
    best.epochs_run = epochs_run;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Result {
    pub params: Vec<f64>,
    pub val_loss: f64,
    /// `(step, val_loss)` at every checkpoint that improved on the previous
    /// best; non-increasing in loss by construction.
    pub improvements: Vec<(u32, f64)>,
}

/// Trains the parameters of a fixed discrete architecture on the tracking
/// loss alone and keeps the best validation checkpoint.
pub fn stage2_train(
    arch: &DiscreteArch,
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    budget: &TrainBudget,
    seed: u64,
) -> Result<Stage2Result, NasError> {
    arch.validate(space)?;
    stage2_train_from(
        arch,
        initial_params(evaluator.param_count(), seed),
        evaluator,
        budget,
    )
}

pub fn stage2_train_from(
    arch: &DiscreteArch,
    mut params: Vec<f64>,
    evaluator: &dyn Evaluator,
    budget: &TrainBudget,
) -> Result<Stage2Result, NasError> {
    let weights = arch.one_hot_weights();
    let interval = budget.eval_interval.max(1);

    let start = evaluator.loss(&weights, &params, Split::Val);
    if !start.is_finite() {
        return Err(NasError::Diverged { stage: 2, epoch: 0 });
    }
    let mut best = (params.clone(), start);
    let mut improvements = alloc::vec![(0, start)];

    for step in 1..=budget.iters {
        let eval = evaluator.evaluate(&weights, &params, Split::Train);
        if !eval.loss.is_finite() {
            return Err(NasError::Diverged {
                stage: 2,
                epoch: step,
            });
        }
        for (p, g) in params.iter_mut().zip(&eval.grad_params) {
            *p -= budget.lr * g;
        }
        if step % interval == 0 || step == budget.iters {
            let val = evaluator.loss(&weights, &params, Split::Val);
            if !val.is_finite() {
                return Err(NasError::Diverged {
                    stage: 2,
                    epoch: step,
                });
            }
            if val < best.1 {
                best = (params.clone(), val);
                improvements.push((step, val));
            }
        }
    }
    Ok(Stage2Result {
        params: best.0,
        val_loss: best.1,
        improvements,
    })
}

/// Per-edge argmax of the softmax weights, then top-2 fan-in per node.
///
/// Edges whose argmax is `none` are dropped. Ties go to the lowest op index,
/// and among incoming edges of equal weight to the lowest edge index.
pub fn discretize(arch: &ArchLogits, space: &SearchSpace) -> Result<DiscreteArch, NasError> {
    let ops = space.candidate_ops();
    let mut best: Vec<Option<(usize, f64)>> = Vec::with_capacity(arch.len());
    for (e, logits) in arch.edges.iter().enumerate() {
        if logits.len() != ops.len() {
            return Err(NasError::LogitArity {
                edge: e,
                expected: ops.len(),
                got: logits.len(),
            });
        }
        let w = softmax_weights(logits)?;
        let mut arg = 0;
        for k in 1..w.len() {
            if w[k] > w[arg] {
                arg = k;
            }
        }
        best.push((ops[arg] != crate::latency::OpKind::None).then_some((arg, w[arg])));
    }
    if best.len() != space.logit_count() {
        return Err(NasError::ArchShape {
            expected: space.logit_count(),
            got: best.len(),
        });
    }

    let edges = space.logit_edges();
    let mut keep = alloc::vec![false; edges.len()];
    for (e, edge) in edges.iter().enumerate() {
        let Some((_, weight)) = best[e] else { continue };
        // rank among retained edges into the same node
        let better = edges
            .iter()
            .enumerate()
            .filter(|(o, other)| {
                *o != e && other.kind == edge.kind && other.to == edge.to
            })
            .filter_map(|(o, _)| best[o].map(|(_, w)| (o, w)))
            .filter(|&(o, w)| w > weight || (w == weight && o < e))
            .count();
        keep[e] = better < 2;
    }
    Ok(DiscreteArch::new(
        best.iter()
            .zip(&keep)
            .map(|(b, k)| if *k { b.map(|(op, _)| ops[op]) } else { None })
            .collect(),
    ))
}
