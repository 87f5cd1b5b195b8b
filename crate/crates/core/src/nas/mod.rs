//! Latency-aware architecture search over a cell-based space.

use alloc::string::String;

use thiserror::Error;

use crate::latency::LatencyError;

mod pareto;
mod search;
mod space;
mod surrogate;

pub use pareto::{
    dominates, hypervolume_2d, pareto_front, pareto_sweep, sweep_point, sweep_points,
    ParetoPoint, SweepBudget,
};
pub use search::{
    discretize, initial_logits, initial_params, stage1_search, stage1_search_from, stage2_train,
    stage2_train_from, total_loss, total_loss_gradient, SearchBudget, Stage1Result, Stage2Result,
    TotalGradient, TrainBudget,
};
pub use space::{
    init_search_space, CellKind, CellSpec, DiscreteArch, LogitEdge, SearchSpace, SpaceConfig,
};
pub use surrogate::{
    op_quality, CapacitySurrogate, Evaluation, Evaluator, QuadraticSurrogate, Split,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NasError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("architecture has {got} edges, search space has {expected}")]
    ArchShape { expected: usize, got: usize },
    #[error("edge {edge} has {got} logits, expected {expected}")]
    LogitArity {
        edge: usize,
        expected: usize,
        got: usize,
    },
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("maximum architecture latency is {0}; cannot normalize")]
    DegenerateLatency(f64),
    #[error("invalid budget: {0}")]
    InvalidBudget(&'static str),
    #[error("stage {stage} diverged at epoch {epoch}")]
    Diverged { stage: u8, epoch: u32 },
    #[error("lambda list is empty")]
    EmptyLambdas,
    #[error(transparent)]
    Latency(#[from] LatencyError),
}
