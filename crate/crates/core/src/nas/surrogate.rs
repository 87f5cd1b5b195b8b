//! Differentiable analytic stand-ins for the tracking loss.
//!
//! An evaluator maps the per-edge operation weights and the model
//! parameters to a loss and its exact gradient in both arguments.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::latency::{OpKind, NUM_OPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad_weights: Vec<Vec<f64>>,
    pub grad_params: Vec<f64>,
}

pub trait Evaluator {
    /// Length of the parameter vector the evaluator expects.
    fn param_count(&self) -> usize;

    fn evaluate(&self, weights: &[Vec<f64>], params: &[f64], split: Split) -> Evaluation;

    fn loss(&self, weights: &[Vec<f64>], params: &[f64], split: Split) -> f64 {
        self.evaluate(weights, params, split).loss
    }
}

/// `Σ (w - w*)^2 + Σ (θ - θ*)^2`, plus a constant `val_offset` on the
/// validation split. The minimizer is `(w*, θ*)` on both splits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSurrogate {
    pub weight_targets: Vec<Vec<f64>>,
    pub param_targets: Vec<f64>,
    pub val_offset: f64,
}

impl Evaluator for QuadraticSurrogate {
    fn param_count(&self) -> usize {
        self.param_targets.len()
    }

    fn evaluate(&self, weights: &[Vec<f64>], params: &[f64], split: Split) -> Evaluation {
        let mut loss = match split {
            Split::Train => 0.0,
            Split::Val => self.val_offset,
        };
        let mut grad_weights = Vec::with_capacity(weights.len());
        for (w, t) in weights.iter().zip(&self.weight_targets) {
            let mut g = Vec::with_capacity(w.len());
            for (wk, tk) in w.iter().zip(t) {
                let d = wk - tk;
                loss += d * d;
                g.push(2.0 * d);
            }
            grad_weights.push(g);
        }
        let mut grad_params = Vec::with_capacity(params.len());
        for (p, t) in params.iter().zip(&self.param_targets) {
            let d = p - t;
            loss += d * d;
            grad_params.push(2.0 * d);
        }
        Evaluation {
            loss,
            grad_weights,
            grad_params,
        }
    }
}

/// Relative representational quality of each candidate op, in [0, 1].
pub fn op_quality(op: OpKind) -> f64 {
    match op {
        OpKind::None => 0.0,
        OpKind::Identity => 0.25,
        OpKind::MaxPool3 => 0.3,
        OpKind::AvgPool3 => 0.32,
        OpKind::DilConv3 => 0.6,
        OpKind::DilConv5 => 0.7,
        OpKind::SepConv3 => 0.72,
        OpKind::SepConv5 => 0.84,
        OpKind::SepConv7 => 0.95,
    }
}

/// Loss that falls monotonically as edges pick higher-quality ops.
///
/// With `c_e = Σ_k w[e][k] q_k` the capacity of edge `e`,
///
/// ```text
/// L = Σ_e imp_e (1 - c_e)^2 + γ Σ_i (θ_i - τ_i (1 + c_{i mod E}) - δ_split)^2
/// ```
///
/// where `δ` is 0 on the train split and `val_shift` on validation. For any
/// fixed weighting the parameter term is minimized at zero on train, which
/// leaves a constant `γ · P · val_shift^2` on validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySurrogate {
    pub quality: [f64; NUM_OPS],
    pub importance: Vec<f64>,
    pub param_scale: Vec<f64>,
    pub coupling: f64,
    pub val_shift: f64,
}

impl CapacitySurrogate {
    /// Edge importances in [0.5, 1.5] and parameter scales in [-1, 1],
    /// drawn from `seed`.
    pub fn new(edges: usize, params: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let importance = (0..edges).map(|_| rng.gen_range(0.5..1.5)).collect();
        let param_scale = (0..params).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut quality = [0.0; NUM_OPS];
        for op in OpKind::ALL {
            quality[op.index()] = op_quality(op);
        }
        Self {
            quality,
            importance,
            param_scale,
            coupling: 0.5,
            val_shift: 0.05,
        }
    }

    fn capacity(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.quality).map(|(a, q)| a * q).sum()
    }

    /// Optimal train-split parameters for `weights`.
    pub fn optimal_params(&self, weights: &[Vec<f64>]) -> Vec<f64> {
        let caps: Vec<f64> = weights.iter().map(|w| self.capacity(w)).collect();
        let e = caps.len().max(1);
        self.param_scale
            .iter()
            .enumerate()
            .map(|(i, s)| s * (1.0 + caps.get(i % e).copied().unwrap_or(0.0)))
            .collect()
    }
}

impl Evaluator for CapacitySurrogate {
    fn param_count(&self) -> usize {
        self.param_scale.len()
    }

    fn evaluate(&self, weights: &[Vec<f64>], params: &[f64], split: Split) -> Evaluation {
        let shift = match split {
            Split::Train => 0.0,
            Split::Val => self.val_shift,
        };
        let edges = weights.len();
        let caps: Vec<f64> = weights.iter().map(|w| self.capacity(w)).collect();

        let mut loss = 0.0;
        // dL/dc_e, folded into weight gradients at the end.
        let mut dcap = vec![0.0; edges];
        for (e, c) in caps.iter().enumerate() {
            let imp = self.importance.get(e).copied().unwrap_or(1.0);
            loss += imp * (1.0 - c) * (1.0 - c);
            dcap[e] -= 2.0 * imp * (1.0 - c);
        }
        let mut grad_params = Vec::with_capacity(params.len());
        for (i, (p, s)) in params.iter().zip(&self.param_scale).enumerate() {
            let c = if edges == 0 { 0.0 } else { caps[i % edges] };
            let r = p - s * (1.0 + c) - shift;
            loss += self.coupling * r * r;
            grad_params.push(2.0 * self.coupling * r);
            if edges > 0 {
                dcap[i % edges] -= 2.0 * self.coupling * r * s;
            }
        }
        let grad_weights = weights
            .iter()
            .zip(&dcap)
            .map(|(w, d)| (0..w.len()).map(|k| d * self.quality[k]).collect())
            .collect();
        Evaluation {
            loss,
            grad_weights,
            grad_params,
        }
    }
}
