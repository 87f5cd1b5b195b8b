//! Operation latency lookup table and the softmax-weighted latency of an
//! architecture encoding.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatencyError {
    #[error("repetition count must be at least 1")]
    ZeroReps,
    #[error("clock went backwards ({later:?} after {earlier:?})")]
    NonMonotonicClock { earlier: Duration, later: Duration },
    #[error("softmax of an empty vector")]
    EmptyLogits,
    #[error("non-finite logit at index {0}")]
    NonFiniteLogit(usize),
    #[error("no latency entry for {0}")]
    MissingEntry(OpConfig),
    #[error("edge {edge} has {got} logits but {expected} candidate ops")]
    LogitArity {
        edge: usize,
        expected: usize,
        got: usize,
    },
    #[error("slot refers to logit vector {index} but the encoding has {count}")]
    SlotOutOfRange { index: usize, count: usize },
    #[error("unknown operation `{0}`")]
    UnknownOp(alloc::string::String),
}

/// The nine candidate operations of a cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    None,
    Identity,
    SepConv3,
    SepConv5,
    SepConv7,
    DilConv3,
    DilConv5,
    MaxPool3,
    AvgPool3,
}

pub const NUM_OPS: usize = 9;

impl OpKind {
    pub const ALL: [OpKind; NUM_OPS] = [
        OpKind::None,
        OpKind::Identity,
        OpKind::SepConv3,
        OpKind::SepConv5,
        OpKind::SepConv7,
        OpKind::DilConv3,
        OpKind::DilConv5,
        OpKind::MaxPool3,
        OpKind::AvgPool3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::None => "none",
            OpKind::Identity => "identity",
            OpKind::SepConv3 => "sep_conv_3",
            OpKind::SepConv5 => "sep_conv_5",
            OpKind::SepConv7 => "sep_conv_7",
            OpKind::DilConv3 => "dil_conv_3",
            OpKind::DilConv5 => "dil_conv_5",
            OpKind::MaxPool3 => "max_pool_3",
            OpKind::AvgPool3 => "avg_pool_3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Spatial kernel size; 0 for `none`, 1 for `identity`.
    pub fn kernel(self) -> usize {
        match self {
            OpKind::None => 0,
            OpKind::Identity => 1,
            OpKind::SepConv3 | OpKind::DilConv3 | OpKind::MaxPool3 | OpKind::AvgPool3 => 3,
            OpKind::SepConv5 | OpKind::DilConv5 => 5,
            OpKind::SepConv7 => 7,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = LatencyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| LatencyError::UnknownOp(s.into()))
    }
}

/// Tensor shape parameters of one operation instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpShape {
    pub in_channels: u32,
    pub out_channels: u32,
    pub resolution: u32,
    pub stride: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpConfig {
    pub op: OpKind,
    pub shape: OpShape,
}

impl OpConfig {
    pub fn new(op: OpKind, shape: OpShape) -> Self {
        Self { op, shape }
    }
}

impl fmt::Display for OpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "op={} cin={} cout={} res={} stride={}",
            self.op,
            self.shape.in_channels,
            self.shape.out_channels,
            self.shape.resolution,
            self.shape.stride
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyEntry {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub reps: u32,
}

/// Measured latencies keyed by exact configuration. No interpolation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatencyTable {
    entries: BTreeMap<OpConfig, LatencyEntry>,
}

impl LatencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cfg: OpConfig, entry: LatencyEntry) -> Option<LatencyEntry> {
        self.entries.insert(cfg, entry)
    }

    pub fn get(&self, cfg: &OpConfig) -> Option<&LatencyEntry> {
        self.entries.get(cfg)
    }

    pub fn mean_ms(&self, cfg: &OpConfig) -> Result<f64, LatencyError> {
        self.get(cfg)
            .map(|e| e.mean_ms)
            .ok_or(LatencyError::MissingEntry(*cfg))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in configuration order.
    pub fn iter(&self) -> impl Iterator<Item = (&OpConfig, &LatencyEntry)> {
        self.entries.iter()
    }

    /// Copy with every mean multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, e)| {
                    (
                        *k,
                        LatencyEntry {
                            mean_ms: e.mean_ms * c,
                            ..*e
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Monotonic time source.
pub trait Clock {
    fn now(&mut self) -> Duration;
}

/// Times `reps` runs of `workload` after `warmup` untimed runs.
///
/// The mean is the arithmetic mean of the timed runs; `std_ms` is the
/// population standard deviation.
pub fn profile_op(
    workload: &mut dyn FnMut(),
    clock: &mut dyn Clock,
    warmup: u32,
    reps: u32,
) -> Result<LatencyEntry, LatencyError> {
    if reps == 0 {
        return Err(LatencyError::ZeroReps);
    }
    for _ in 0..warmup {
        workload();
    }
    let mut samples = Vec::with_capacity(reps as usize);
    let mut last = clock.now();
    for _ in 0..reps {
        let start = clock.now();
        if start < last {
            return Err(LatencyError::NonMonotonicClock {
                earlier: last,
                later: start,
            });
        }
        workload();
        let end = clock.now();
        if end < start {
            return Err(LatencyError::NonMonotonicClock {
                earlier: start,
                later: end,
            });
        }
        last = end;
        samples.push((end - start).as_nanos() as f64 / 1e6);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(LatencyEntry {
        mean_ms: mean,
        std_ms: libm::sqrt(var),
        reps,
    })
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax_weights(logits: &[f64]) -> Result<Vec<f64>, LatencyError> {
    if logits.is_empty() {
        return Err(LatencyError::EmptyLogits);
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(LatencyError::NonFiniteLogit(i));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Per-edge logits over the candidate operations.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchLogits {
    pub edges: Vec<Vec<f64>>,
}

impl ArchLogits {
    pub fn new(edges: Vec<Vec<f64>>) -> Self {
        Self { edges }
    }

    pub fn uniform(edges: usize, ops: usize) -> Self {
        Self {
            edges: alloc::vec![alloc::vec![0.0; ops]; edges],
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weights(&self) -> Result<Vec<Vec<f64>>, LatencyError> {
        self.edges.iter().map(|e| softmax_weights(e)).collect()
    }
}

/// One edge instance in the concrete network: which logit vector drives it
/// and the tensor shape it runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSlot {
    pub logit_index: usize,
    pub shape: OpShape,
}

/// `Σ_slots Σ_ops softmax(α_slot)[op] · Lat(op, slot shape)`, looked up
/// directly in `table`.
pub fn expected_latency(
    arch: &ArchLogits,
    table: &LatencyTable,
    candidates: &[OpKind],
    slots: &[EdgeSlot],
) -> Result<f64, LatencyError> {
    let weights = arch.weights()?;
    let mut total = 0.0;
    for slot in slots {
        let w = weights
            .get(slot.logit_index)
            .ok_or(LatencyError::SlotOutOfRange {
                index: slot.logit_index,
                count: weights.len(),
            })?;
        if w.len() != candidates.len() {
            return Err(LatencyError::LogitArity {
                edge: slot.logit_index,
                expected: candidates.len(),
                got: w.len(),
            });
        }
        for (wk, op) in w.iter().zip(candidates) {
            total += wk * table.mean_ms(&OpConfig::new(*op, slot.shape))?;
        }
    }
    Ok(total)
}

/// Table lookups folded per logit vector: `coeff[e][k]` is the summed
/// latency of op `k` over every slot driven by logit vector `e`, so that a
/// weighting `w` costs `Σ_e Σ_k w[e][k] coeff[e][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyModel {
    candidates: Vec<OpKind>,
    coeff: Vec<Vec<f64>>,
}

impl LatencyModel {
    pub fn new(
        table: &LatencyTable,
        candidates: &[OpKind],
        slots: &[EdgeSlot],
        logit_count: usize,
    ) -> Result<Self, LatencyError> {
        let mut coeff = alloc::vec![alloc::vec![0.0; candidates.len()]; logit_count];
        for slot in slots {
            let row = coeff
                .get_mut(slot.logit_index)
                .ok_or(LatencyError::SlotOutOfRange {
                    index: slot.logit_index,
                    count: logit_count,
                })?;
            for (c, op) in row.iter_mut().zip(candidates) {
                *c += table.mean_ms(&OpConfig::new(*op, slot.shape))?;
            }
        }
        Ok(Self {
            candidates: candidates.to_vec(),
            coeff,
        })
    }

    pub fn candidates(&self) -> &[OpKind] {
        &self.candidates
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeff
    }

    pub fn weighted(&self, weights: &[Vec<f64>]) -> f64 {
        self.coeff
            .iter()
            .zip(weights)
            .map(|(c, w)| c.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    pub fn expected(&self, arch: &ArchLogits) -> Result<f64, LatencyError> {
        Ok(self.weighted(&arch.weights()?))
    }

    /// Latency of the most expensive discrete choice on every logit vector.
    pub fn max_latency(&self) -> f64 {
        self.coeff
            .iter()
            .map(|c| c.iter().copied().fold(0.0, f64::max))
            .sum()
    }

    /// Latency of one op choice per logit vector; `None` entries cost 0.
    pub fn discrete(&self, choice: &[Option<OpKind>]) -> f64 {
        self.coeff
            .iter()
            .zip(choice)
            .filter_map(|(c, op)| {
                let op = (*op)?;
                let k = self.candidates.iter().position(|o| *o == op)?;
                Some(c[k])
            })
            .sum()
    }
}
