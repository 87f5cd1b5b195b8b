//! Cell-based search space and discrete architectures.
//!
//! Every cell is a DAG over `nodes` nodes with one edge per pair
//! `from < to`. Architecture logits are shared by all cells of the same kind
//! and by every branch, so the encoding holds one logit vector per
//! (cell kind, edge position).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::latency::{EdgeSlot, OpKind, OpShape, NUM_OPS};

use super::NasError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    Normal,
    Reduction,
}

impl CellKind {
    pub fn tag(self) -> char {
        match self {
            CellKind::Normal => 'n',
            CellKind::Reduction => 'r',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Normal => "normal",
            CellKind::Reduction => "reduction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub kind: CellKind,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceConfig {
    /// Cell layout of one branch, input to output.
    pub cells: Vec<CellSpec>,
    /// Number of parallel branches sharing the encoding (image and LiDAR).
    pub branches: usize,
    pub stem_channels: u32,
    pub resolution: u32,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            cells: alloc::vec![
                CellSpec {
                    kind: CellKind::Normal,
                    nodes: 4,
                },
                CellSpec {
                    kind: CellKind::Reduction,
                    nodes: 4,
                },
            ],
            branches: 2,
            stem_channels: 8,
            resolution: 32,
        }
    }
}

/// The edge a logit vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogitEdge {
    pub kind: CellKind,
    pub from: usize,
    pub to: usize,
}

impl fmt::Display for LogitEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}-{}", self.kind.tag(), self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    config: SpaceConfig,
    candidate_ops: [OpKind; NUM_OPS],
    logit_edges: Vec<LogitEdge>,
}

fn cell_edges(nodes: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..nodes).flat_map(|to| (0..to).map(move |from| (from, to)))
}

/// Validates `cfg` and lays out the shared logit edges (normal cells first,
/// edges grouped by destination node).
pub fn init_search_space(cfg: SpaceConfig) -> Result<SearchSpace, NasError> {
    if cfg.cells.is_empty() {
        return Err(NasError::InvalidSpace("at least one cell is required".into()));
    }
    if cfg.branches == 0 || cfg.stem_channels == 0 || cfg.resolution == 0 {
        return Err(NasError::InvalidSpace(
            "branches, stem channels and resolution must be positive".into(),
        ));
    }
    let mut kind_nodes: [Option<usize>; 2] = [None, None];
    for (i, cell) in cfg.cells.iter().enumerate() {
        if cell.nodes < 2 {
            return Err(NasError::InvalidSpace(format!(
                "cell {i} has {} nodes; at least 2 are required",
                cell.nodes
            )));
        }
        let slot = &mut kind_nodes[cell.kind as usize];
        match slot {
            Some(n) if *n != cell.nodes => {
                return Err(NasError::InvalidSpace(format!(
                    "{} cells share an encoding and must have equal node counts ({} vs {})",
                    cell.kind.name(),
                    n,
                    cell.nodes
                )))
            }
            _ => *slot = Some(cell.nodes),
        }
    }
    let mut logit_edges = Vec::new();
    for (kind, nodes) in [CellKind::Normal, CellKind::Reduction]
        .into_iter()
        .zip(kind_nodes)
    {
        let Some(nodes) = nodes else { continue };
        logit_edges.extend(cell_edges(nodes).map(|(from, to)| LogitEdge { kind, from, to }));
    }
    Ok(SearchSpace {
        config: cfg,
        candidate_ops: OpKind::ALL,
        logit_edges,
    })
}

impl SearchSpace {
    pub fn config(&self) -> &SpaceConfig {
        &self.config
    }

    pub fn candidate_ops(&self) -> &[OpKind] {
        &self.candidate_ops
    }

    pub fn logit_edges(&self) -> &[LogitEdge] {
        &self.logit_edges
    }

    /// Number of logit vectors in an encoding.
    pub fn logit_count(&self) -> usize {
        self.logit_edges.len()
    }

    /// Edges of one branch, counted per cell.
    pub fn edge_count(&self) -> usize {
        self.config
            .cells
            .iter()
            .map(|c| c.nodes * (c.nodes - 1) / 2)
            .sum()
    }

    pub fn logit_index(&self, kind: CellKind, from: usize, to: usize) -> Option<usize> {
        self.logit_edges
            .iter()
            .position(|e| e.kind == kind && e.from == from && e.to == to)
    }

    /// Every edge instance of every cell in every branch, with the tensor
    /// shape it runs at.
    ///
    /// Normal cells keep channels and resolution. Reduction cells double the
    /// channels and halve the resolution; their edges leaving node 0 carry
    /// the stride-2 transition.
    pub fn slots(&self) -> Vec<EdgeSlot> {
        let mut out = Vec::new();
        for _ in 0..self.config.branches {
            let (mut channels, mut res) = (self.config.stem_channels, self.config.resolution);
            for cell in &self.config.cells {
                for (from, to) in cell_edges(cell.nodes) {
                    let logit_index = self
                        .logit_index(cell.kind, from, to)
                        .expect("edge laid out at init");
                    let shape = match cell.kind {
                        CellKind::Normal => OpShape {
                            in_channels: channels,
                            out_channels: channels,
                            resolution: res,
                            stride: 1,
                        },
                        CellKind::Reduction if from == 0 => OpShape {
                            in_channels: channels,
                            out_channels: channels * 2,
                            resolution: res,
                            stride: 2,
                        },
                        CellKind::Reduction => OpShape {
                            in_channels: channels * 2,
                            out_channels: channels * 2,
                            resolution: (res / 2).max(1),
                            stride: 1,
                        },
                    };
                    out.push(EdgeSlot { logit_index, shape });
                }
                if cell.kind == CellKind::Reduction {
                    channels *= 2;
                    res = (res / 2).max(1);
                }
            }
        }
        out
    }

    /// Distinct `(op, shape)` configurations the latency table must cover.
    pub fn required_configs(&self) -> Vec<crate::latency::OpConfig> {
        let mut shapes: Vec<OpShape> = self.slots().into_iter().map(|s| s.shape).collect();
        shapes.sort_unstable();
        shapes.dedup();
        shapes
            .into_iter()
            .flat_map(|shape| {
                self.candidate_ops
                    .iter()
                    .map(move |op| crate::latency::OpConfig::new(*op, shape))
            })
            .collect()
    }
}

/// One chosen operation per logit edge; `None` marks a pruned edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteArch {
    pub choices: Vec<Option<OpKind>>,
}

impl DiscreteArch {
    pub fn new(choices: Vec<Option<OpKind>>) -> Self {
        Self { choices }
    }

    pub fn retained(&self) -> impl Iterator<Item = (usize, OpKind)> + '_ {
        self.choices
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|op| (i, op)))
    }

    /// Checks the no-`none` and fan-in-of-two invariants against `space`.
    pub fn validate(&self, space: &SearchSpace) -> Result<(), NasError> {
        if self.choices.len() != space.logit_count() {
            return Err(NasError::ArchShape {
                expected: space.logit_count(),
                got: self.choices.len(),
            });
        }
        if self.choices.contains(&Some(OpKind::None)) {
            return Err(NasError::InvalidArch("retained edge uses `none`".into()));
        }
        for (k, e) in space.logit_edges().iter().enumerate() {
            let fan_in = space
                .logit_edges()
                .iter()
                .zip(&self.choices)
                .filter(|(o, c)| o.kind == e.kind && o.to == e.to && c.is_some())
                .count();
            if fan_in > 2 {
                return Err(NasError::InvalidArch(format!(
                    "node {} of the {} cell keeps {fan_in} incoming edges (edge {k})",
                    e.to,
                    e.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// One-hot logits: the chosen op (or `none` for pruned edges) gets
    /// `peak`, everything else 0.
    pub fn to_logits(&self, peak: f64) -> crate::latency::ArchLogits {
        crate::latency::ArchLogits::new(
            self.choices
                .iter()
                .map(|c| {
                    let mut v = alloc::vec![0.0; NUM_OPS];
                    v[c.unwrap_or(OpKind::None).index()] = peak;
                    v
                })
                .collect(),
        )
    }

    /// Softmax-free one-hot weights for evaluation.
    pub fn one_hot_weights(&self) -> Vec<Vec<f64>> {
        self.choices
            .iter()
            .map(|c| {
                let mut v = alloc::vec![0.0; NUM_OPS];
                v[c.unwrap_or(OpKind::None).index()] = 1.0;
                v
            })
            .collect()
    }

    /// `edge:op` list of the retained edges, e.g. `n0-1:sep_conv_3,r0-1:identity`.
    pub fn describe(&self, space: &SearchSpace) -> String {
        let parts: Vec<String> = self
            .retained()
            .map(|(i, op)| format!("{}:{}", space.logit_edges()[i], op))
            .collect();
        if parts.is_empty() {
            String::from("-")
        } else {
            parts.join(",")
        }
    }

    /// Inverse of [`DiscreteArch::describe`].
    pub fn parse(text: &str, space: &SearchSpace) -> Result<Self, NasError> {
        let mut choices = alloc::vec![None; space.logit_count()];
        let text = text.trim();
        if text == "-" || text.is_empty() {
            return Ok(Self { choices });
        }
        for part in text.split(',') {
            let (edge, op) = part
                .split_once(':')
                .ok_or_else(|| NasError::InvalidArch(format!("missing `:` in `{part}`")))?;
            let k = space
                .logit_edges()
                .iter()
                .position(|e| format!("{e}") == edge)
                .ok_or_else(|| NasError::InvalidArch(format!("unknown edge `{edge}`")))?;
            let op = op
                .parse::<OpKind>()
                .map_err(|_| NasError::InvalidArch(format!("unknown op `{op}`")))?;
            choices[k] = Some(op);
        }
        Ok(Self { choices })
    }
}
