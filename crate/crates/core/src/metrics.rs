//! CLEAR-MOT accuracy: false positives, misses, identity switches and MOTA.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{iou_2d, Box2D};
use crate::matching::max_weight_matching;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("duplicate {side} id {id} in frame {frame}")]
    DuplicateId {
        side: &'static str,
        id: i64,
        frame: u32,
    },
    #[error("IoU threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

/// Identified boxes per frame index.
pub type FrameBoxes = BTreeMap<u32, Vec<(i64, Box2D)>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMatching {
    /// `(gt_id, hyp_id)` pairs, sorted by `gt_id`.
    pub matches: Vec<(i64, i64)>,
    pub unmatched_gt: Vec<i64>,
    pub unmatched_hyp: Vec<i64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameCounts {
    pub frame: u32,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub gt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotReport {
    /// `None` when the ground truth is empty.
    pub mota: Option<f64>,
    pub fp: usize,
    pub fn_: usize,
    pub idsw: usize,
    pub matches: usize,
    pub gt_count: usize,
    pub per_frame: Vec<FrameCounts>,
}

fn check_unique(side: &'static str, items: &[(i64, Box2D)], frame: u32) -> Result<(), MetricsError> {
    let mut seen = BTreeSet::new();
    for (id, _) in items {
        if !seen.insert(*id) {
            return Err(MetricsError::DuplicateId {
                side,
                id: *id,
                frame,
            });
        }
    }
    Ok(())
}

fn check_threshold(thresh: f64) -> Result<(), MetricsError> {
    if thresh > 0.0 && thresh <= 1.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidThreshold(thresh))
    }
}

fn match_frame_at(
    frame: u32,
    gt: &[(i64, Box2D)],
    hyp: &[(i64, Box2D)],
    prev: &BTreeMap<i64, i64>,
    thresh: f64,
) -> Result<FrameMatching, MetricsError> {
    check_threshold(thresh)?;
    check_unique("gt", gt, frame)?;
    check_unique("hyp", hyp, frame)?;

    let mut gt_used = alloc::vec![false; gt.len()];
    let mut hyp_used = alloc::vec![false; hyp.len()];
    let mut matches = Vec::new();

    for (gi, (gid, gbox)) in gt.iter().enumerate() {
        let Some(hid) = prev.get(gid) else { continue };
        if let Some(hi) = hyp.iter().position(|(id, _)| id == hid) {
            if !hyp_used[hi] && iou_2d(gbox, &hyp[hi].1) >= thresh {
                gt_used[gi] = true;
                hyp_used[hi] = true;
                matches.push((*gid, *hid));
            }
        }
    }

    let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_used[i]).collect();
    let free_hyp: Vec<usize> = (0..hyp.len()).filter(|&i| !hyp_used[i]).collect();
    let mut weights = Vec::with_capacity(free_gt.len() * free_hyp.len());
    for &g in &free_gt {
        for &h in &free_hyp {
            weights.push(iou_2d(&gt[g].1, &hyp[h].1));
        }
    }
    let pairs = max_weight_matching(&weights, free_gt.len(), free_hyp.len(), |r, c| {
        weights[r * free_hyp.len() + c] >= thresh
    });
    for (r, c) in pairs {
        let (g, h) = (free_gt[r], free_hyp[c]);
        gt_used[g] = true;
        hyp_used[h] = true;
        matches.push((gt[g].0, hyp[h].0));
    }
    matches.sort_unstable();

    Ok(FrameMatching {
        matches,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).map(|i| gt[i].0).collect(),
        unmatched_hyp: (0..hyp.len())
            .filter(|&i| !hyp_used[i])
            .map(|i| hyp[i].0)
            .collect(),
    })
}

/// Matches one frame, keeping still-valid correspondences from `prev`
/// (gt id to hyp id) before matching the rest by maximum total IoU among
/// pairs with IoU at least `thresh`.
pub fn match_frame(
    gt: &[(i64, Box2D)],
    hyp: &[(i64, Box2D)],
    prev: &BTreeMap<i64, i64>,
    thresh: f64,
) -> Result<FrameMatching, MetricsError> {
    match_frame_at(0, gt, hyp, prev, thresh)
}

/// Accumulates CLEAR-MOT counts over the union of both sequences' frames.
pub fn clear_mot(gt: &FrameBoxes, hyp: &FrameBoxes, thresh: f64) -> Result<MotReport, MetricsError> {
    check_threshold(thresh)?;
    let frames: BTreeSet<u32> = gt.keys().chain(hyp.keys()).copied().collect();
    let empty = Vec::new();

    let mut current: BTreeMap<i64, i64> = BTreeMap::new();
    let mut last_matched: BTreeMap<i64, i64> = BTreeMap::new();
    let mut per_frame = Vec::with_capacity(frames.len());
    let mut matched_total = 0;

    for frame in frames {
        let g = gt.get(&frame).unwrap_or(&empty);
        let h = hyp.get(&frame).unwrap_or(&empty);
        let m = match_frame_at(frame, g, h, &current, thresh)?;
        let mut idsw = 0;
        current.clear();
        for &(gid, hid) in &m.matches {
            if let Some(prev_h) = last_matched.insert(gid, hid) {
                if prev_h != hid {
                    idsw += 1;
                }
            }
            current.insert(gid, hid);
        }
        matched_total += m.matches.len();
        per_frame.push(FrameCounts {
            frame,
            fp: m.unmatched_hyp.len(),
            fn_: m.unmatched_gt.len(),
            idsw,
            gt: g.len(),
        });
    }

    let fp = per_frame.iter().map(|f| f.fp).sum();
    let fn_ = per_frame.iter().map(|f| f.fn_).sum();
    let idsw = per_frame.iter().map(|f| f.idsw).sum();
    let gt_count = per_frame.iter().map(|f| f.gt).sum();
    let mota = (gt_count > 0).then(|| 1.0 - (fp + fn_ + idsw) as f64 / gt_count as f64);
    Ok(MotReport {
        mota,
        fp,
        fn_,
        idsw,
        matches: matched_total,
        gt_count,
        per_frame,
    })
}
