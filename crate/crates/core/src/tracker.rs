//! Online tracking: per-frame association, ID propagation, and the
//! tentative-birth / delayed-death lifecycle.
//!
//! Tentative tracklets take part in association so their hits can
//! accumulate, but only receive a public ID once they have been seen in
//! `t_birth` consecutive frames. A tentative tracklet that misses a single
//! frame is discarded. Confirmed tracklets survive up to `t_death - 1`
//! consecutive misses and stay eligible for matching meanwhile.

use alloc::vec::Vec;

use thiserror::Error;

use crate::assoc::{solve_exact, AssociationProblem, AssociationSolution};
use crate::detection::{Detection, SequenceDetections};
use crate::scoring::{FeatureVector, ScoreError, ScoreSet, Scorer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("score set shaped ({got_prev}, {got_curr}) but frame has {tracklets} tracklets and {detections} detections")]
    ShapeMismatch {
        tracklets: usize,
        detections: usize,
        got_prev: usize,
        got_curr: usize,
    },
    #[error("frame {frame} is not after the previous frame {previous}")]
    NonMonotonicFrame { frame: u32, previous: u32 },
    #[error("t_birth and t_death must be at least 1 (got {t_birth}, {t_death})")]
    InvalidConfig { t_birth: u32, t_death: u32 },
    #[error("scoring frame {frame}: {source}")]
    Scoring { frame: u32, source: ScoreError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    /// Assigned at confirmation.
    pub id: Option<u64>,
    pub detections: Vec<Detection>,
    pub state: TrackState,
    pub consecutive_hits: u32,
    pub consecutive_misses: u32,
    pub last_feature: Option<FeatureVector>,
}

impl Tracklet {
    /// A fresh tentative tracklet seeded by one detection.
    pub fn tentative(det: Detection) -> Self {
        let last_feature = det.feature.clone();
        Self {
            id: None,
            detections: alloc::vec![det],
            state: TrackState::Tentative,
            consecutive_hits: 1,
            consecutive_misses: 0,
            last_feature,
        }
    }

    pub fn last_detection(&self) -> Option<&Detection> {
        self.detections.last()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    fn hit(&mut self, det: Detection) {
        if det.feature.is_some() {
            self.last_feature = det.feature.clone();
        }
        self.detections.push(det);
        self.consecutive_hits += 1;
        self.consecutive_misses = 0;
    }

    fn miss(&mut self) {
        self.consecutive_misses += 1;
        self.consecutive_hits = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackerConfig {
    pub t_birth: u32,
    pub t_death: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            t_birth: 3,
            t_death: 5,
        }
    }
}

impl TrackerConfig {
    pub fn new(t_birth: u32, t_death: u32) -> Result<Self, TrackError> {
        if t_birth == 0 || t_death == 0 {
            return Err(TrackError::InvalidConfig { t_birth, t_death });
        }
        Ok(Self { t_birth, t_death })
    }
}

/// Outcome counts of one [`TrackerState::step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub appended: usize,
    pub spawned: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    active: Vec<Tracklet>,
    finished: Vec<Tracklet>,
    next_id: u64,
    config: TrackerConfig,
    last_frame: Option<u32>,
    last_counts: StepCounts,
}

impl TrackerState {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackError> {
        let config = TrackerConfig::new(config.t_birth, config.t_death)?;
        Ok(Self {
            active: Vec::new(),
            finished: Vec::new(),
            next_id: 0,
            config,
            last_frame: None,
            last_counts: StepCounts::default(),
        })
    }

    pub fn active(&self) -> &[Tracklet] {
        &self.active
    }

    /// Confirmed tracklets that have since died.
    pub fn finished(&self) -> &[Tracklet] {
        &self.finished
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn config(&self) -> TrackerConfig {
        self.config
    }

    pub fn last_counts(&self) -> StepCounts {
        self.last_counts
    }

    /// Associates `detections` of `frame` with the active tracklets using
    /// `scores`, shaped `(active().len(), detections.len())`.
    pub fn step(
        &mut self,
        frame: u32,
        detections: Vec<Detection>,
        scores: &ScoreSet,
    ) -> Result<AssociationSolution, TrackError> {
        if scores.n_prev() != self.active.len() || scores.n_curr() != detections.len() {
            return Err(TrackError::ShapeMismatch {
                tracklets: self.active.len(),
                detections: detections.len(),
                got_prev: scores.n_prev(),
                got_curr: scores.n_curr(),
            });
        }
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(TrackError::NonMonotonicFrame { frame, previous });
            }
        }
        self.last_frame = Some(frame);

        let sol = solve_exact(&AssociationProblem::new(scores.clone()));
        let mut counts = StepCounts::default();
        let mut slots: Vec<Option<Detection>> = detections.into_iter().map(Some).collect();

        for (i, track) in self.active.iter_mut().enumerate() {
            match sol.linked_curr(i) {
                Some(j) => {
                    let det = slots[j].take().expect("each detection linked at most once");
                    track.hit(det);
                    counts.appended += 1;
                }
                None => track.miss(),
            }
        }
        for (j, slot) in slots.into_iter().enumerate() {
            let Some(det) = slot else { continue };
            if sol.f_in[j] || sol.f_det_curr[j] {
                self.active.push(Tracklet::tentative(det));
                counts.spawned += 1;
            } else {
                counts.dropped += 1;
            }
        }
        self.last_counts = counts;
        self.apply_birth_death();
        Ok(sol)
    }

    /// Confirms tentative tracklets with enough consecutive hits, discards
    /// tentative ones that missed, and retires confirmed ones that missed
    /// `t_death` frames in a row.
    pub fn apply_birth_death(&mut self) {
        let TrackerConfig { t_birth, t_death } = self.config;
        let mut kept = Vec::with_capacity(self.active.len());
        for mut track in self.active.drain(..) {
            match track.state {
                TrackState::Tentative if track.consecutive_misses > 0 => {}
                TrackState::Tentative => {
                    if track.consecutive_hits >= t_birth {
                        track.state = TrackState::Confirmed;
                        track.id = Some(self.next_id);
                        self.next_id += 1;
                    }
                    kept.push(track);
                }
                TrackState::Confirmed if track.consecutive_misses >= t_death => {
                    track.state = TrackState::Dead;
                    self.finished.push(track);
                }
                TrackState::Confirmed => kept.push(track),
                TrackState::Dead => self.finished.push(track),
            }
        }
        self.active = kept;
    }

    /// Every tracklet ever confirmed, ordered by ID.
    pub fn into_confirmed(self) -> Vec<Tracklet> {
        let mut out: Vec<Tracklet> = self
            .finished
            .into_iter()
            .chain(self.active.into_iter().filter(|t| t.id.is_some()))
            .collect();
        out.sort_by_key(|t| t.id);
        out
    }
}

/// Tracks a whole sequence frame by frame, from its first to its last frame
/// index. Frames absent from the sequence count as frames with no
/// detections.
pub fn run_sequence(
    seq: &SequenceDetections,
    scorer: &mut dyn Scorer,
    cfg: TrackerConfig,
) -> Result<Vec<Tracklet>, TrackError> {
    let mut state = TrackerState::new(cfg)?;
    let Some((first, last)) = seq.frame_span() else {
        return Ok(Vec::new());
    };
    for frame in first..=last {
        let dets = seq.frames.get(&frame).cloned().unwrap_or_default();
        let scores = scorer
            .score(state.active(), &dets)
            .map_err(|source| TrackError::Scoring { frame, source })?;
        state.step(frame, dets, &scores)?;
    }
    Ok(state.into_confirmed())
}
