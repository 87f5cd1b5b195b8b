//! Score families for one frame pair and the deterministic baseline scorer.

use alloc::vec::Vec;

use thiserror::Error;

use crate::detection::Detection;
use crate::geometry::iou_2d;
use crate::tracker::Tracklet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{family} has length {actual}, expected {expected}")]
    ShapeMismatch {
        family: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{family}[{index}] is not finite")]
    NonFinite { family: &'static str, index: usize },
    #[error("tracklet {0} has no detections")]
    EmptyTracklet(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    fn same_dim(&self, other: &Self) -> Result<(), ScoreError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(ScoreError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }

    pub fn cosine_similarity(&self, other: &Self) -> Result<f64, ScoreError> {
        self.same_dim(other)?;
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let na = libm::sqrt(self.0.iter().map(|a| a * a).sum());
        let nb = libm::sqrt(other.0.iter().map(|b| b * b).sum());
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        Ok((dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

/// Pairwise elementwise absolute differences; entry `[n][m]` compares
/// `prev[n]` with `curr[m]`.
pub fn correlation_features(
    prev: &[FeatureVector],
    curr: &[FeatureVector],
) -> Result<Vec<Vec<FeatureVector>>, ScoreError> {
    let mut grid = Vec::with_capacity(prev.len());
    for p in prev {
        let mut row = Vec::with_capacity(curr.len());
        for c in curr {
            p.same_dim(c)?;
            row.push(FeatureVector(
                p.0.iter().zip(&c.0).map(|(a, b)| (a - b).abs()).collect(),
            ));
        }
        grid.push(row);
    }
    Ok(grid)
}

/// Elementwise sum of the two modality features.
pub fn fuse_features(
    image_feat: &FeatureVector,
    lidar_feat: &FeatureVector,
) -> Result<FeatureVector, ScoreError> {
    image_feat.same_dim(lidar_feat)?;
    Ok(FeatureVector(
        image_feat
            .0
            .iter()
            .zip(&lidar_feat.0)
            .map(|(a, b)| a + b)
            .collect(),
    ))
}

/// Start, end, confidence and link scores between `n_prev` tracklets and
/// `n_curr` detections. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    n_prev: usize,
    n_curr: usize,
    s_in: Vec<f64>,
    s_out: Vec<f64>,
    s_det_prev: Vec<f64>,
    s_det_curr: Vec<f64>,
    s_link: Vec<f64>,
}

fn check_family(family: &'static str, values: &[f64], expected: usize) -> Result<(), ScoreError> {
    if values.len() != expected {
        return Err(ScoreError::ShapeMismatch {
            family,
            expected,
            actual: values.len(),
        });
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(ScoreError::NonFinite { family, index }),
        None => Ok(()),
    }
}

impl ScoreSet {
    /// `s_link` is row-major `n_prev x n_curr`, where `n_prev = s_out.len()`
    /// and `n_curr = s_in.len()`.
    pub fn new(
        s_in: Vec<f64>,
        s_out: Vec<f64>,
        s_det_prev: Vec<f64>,
        s_det_curr: Vec<f64>,
        s_link: Vec<f64>,
    ) -> Result<Self, ScoreError> {
        let n_prev = s_out.len();
        let n_curr = s_in.len();
        check_family("s_in", &s_in, n_curr)?;
        check_family("s_out", &s_out, n_prev)?;
        check_family("s_det_prev", &s_det_prev, n_prev)?;
        check_family("s_det_curr", &s_det_curr, n_curr)?;
        check_family("s_link", &s_link, n_prev * n_curr)?;
        Ok(Self {
            n_prev,
            n_curr,
            s_in,
            s_out,
            s_det_prev,
            s_det_curr,
            s_link,
        })
    }

    pub fn empty() -> Self {
        Self {
            n_prev: 0,
            n_curr: 0,
            s_in: Vec::new(),
            s_out: Vec::new(),
            s_det_prev: Vec::new(),
            s_det_curr: Vec::new(),
            s_link: Vec::new(),
        }
    }

    pub fn n_prev(&self) -> usize {
        self.n_prev
    }

    pub fn n_curr(&self) -> usize {
        self.n_curr
    }

    pub fn s_in(&self) -> &[f64] {
        &self.s_in
    }

    pub fn s_out(&self) -> &[f64] {
        &self.s_out
    }

    pub fn s_det_prev(&self) -> &[f64] {
        &self.s_det_prev
    }

    pub fn s_det_curr(&self) -> &[f64] {
        &self.s_det_curr
    }

    pub fn s_link_row_major(&self) -> &[f64] {
        &self.s_link
    }

    pub fn s_link(&self, i: usize, j: usize) -> f64 {
        self.s_link[i * self.n_curr + j]
    }

    /// Multiplies every score by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, ScoreError> {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self::new(
            s(&self.s_in),
            s(&self.s_out),
            s(&self.s_det_prev),
            s(&self.s_det_curr),
            s(&self.s_link),
        )
    }

    /// Replaces one link score.
    pub fn with_link(&self, i: usize, j: usize, value: f64) -> Result<Self, ScoreError> {
        let mut link = self.s_link.clone();
        link[i * self.n_curr + j] = value;
        Self::new(
            self.s_in.clone(),
            self.s_out.clone(),
            self.s_det_prev.clone(),
            self.s_det_curr.clone(),
            link,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorerConfig {
    pub w_iou: f64,
    pub w_app: f64,
    pub w_det: f64,
    pub terminal_score: f64,
    pub feature_dim: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            w_iou: 1.0,
            w_app: 1.0,
            w_det: 1.0,
            terminal_score: -0.2,
            feature_dim: 32,
        }
    }
}

/// Anything that can score the active tracklets against a frame's detections.
pub trait Scorer {
    fn score(&mut self, tracklets: &[Tracklet], detections: &[Detection])
        -> Result<ScoreSet, ScoreError>;
}

fn check_feature(f: &FeatureVector, dim: usize) -> Result<(), ScoreError> {
    if f.dim() == dim {
        Ok(())
    } else {
        Err(ScoreError::DimensionMismatch {
            expected: dim,
            actual: f.dim(),
        })
    }
}

/// Geometric/appearance stand-in for a learned score estimator.
///
/// Link scores are `w_iou * (2 IoU - 1) + w_app * cos(f_i, f_j)`, the
/// appearance term being zero unless both sides carry a feature.
pub fn baseline_scores(
    tracklets: &[Tracklet],
    detections: &[Detection],
    cfg: &ScorerConfig,
) -> Result<ScoreSet, ScoreError> {
    let (n, m) = (tracklets.len(), detections.len());
    let mut last = Vec::with_capacity(n);
    for (i, t) in tracklets.iter().enumerate() {
        let det = t.last_detection().ok_or(ScoreError::EmptyTracklet(i))?;
        if let Some(f) = &t.last_feature {
            check_feature(f, cfg.feature_dim)?;
        }
        last.push(det);
    }
    for d in detections {
        if let Some(f) = &d.feature {
            check_feature(f, cfg.feature_dim)?;
        }
    }

    let mut link = Vec::with_capacity(n * m);
    for (t, prev) in tracklets.iter().zip(&last) {
        for d in detections {
            let geo = cfg.w_iou * (2.0 * iou_2d(&prev.bbox, &d.bbox) - 1.0);
            let app = match (&t.last_feature, &d.feature) {
                (Some(a), Some(b)) => cfg.w_app * a.cosine_similarity(b)?,
                _ => 0.0,
            };
            link.push(geo + app);
        }
    }
    let det_score = |c: f64| cfg.w_det * (2.0 * c - 1.0);
    ScoreSet::new(
        alloc::vec![cfg.terminal_score; m],
        alloc::vec![cfg.terminal_score; n],
        last.iter().map(|d| det_score(d.confidence())).collect(),
        detections.iter().map(|d| det_score(d.confidence())).collect(),
        link,
    )
}

/// [`Scorer`] wrapper around [`baseline_scores`].
#[derive(Debug, Clone, Default)]
pub struct BaselineScorer {
    pub config: ScorerConfig,
}

impl BaselineScorer {
    pub fn new(config: ScorerConfig) -> Self {
        Self { config }
    }
}

impl Scorer for BaselineScorer {
    fn score(
        &mut self,
        tracklets: &[Tracklet],
        detections: &[Detection],
    ) -> Result<ScoreSet, ScoreError> {
        baseline_scores(tracklets, detections, &self.config)
    }
}
