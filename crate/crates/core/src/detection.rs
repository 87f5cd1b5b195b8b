use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{Box2D, Box3D};
use crate::scoring::FeatureVector;

/// Per-object annotation fields carried through tracking untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectAttributes {
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
}

impl Default for ObjectAttributes {
    fn default() -> Self {
        Self {
            truncated: -1.0,
            occluded: -1,
            alpha: -10.0,
        }
    }
}

/// One detected object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub class_name: String,
    pub attributes: ObjectAttributes,
    pub bbox: Box2D,
    /// (height, width, length), as stored in the source file.
    pub dimensions: [f64; 3],
    pub location: [f64; 3],
    pub rotation_y: f64,
    /// Detector confidence; `None` for label files.
    pub score: Option<f64>,
    pub feature: Option<FeatureVector>,
}

impl Detection {
    /// A detection with only a frame, a 2D box and a confidence.
    pub fn from_box(frame: u32, bbox: Box2D, score: f64) -> Self {
        Self {
            frame,
            class_name: String::from("Car"),
            attributes: ObjectAttributes::default(),
            bbox,
            dimensions: [-1.0; 3],
            location: [-1000.0; 3],
            rotation_y: -10.0,
            score: Some(score),
            feature: None,
        }
    }

    pub fn with_feature(mut self, feature: FeatureVector) -> Self {
        self.feature = Some(feature);
        self
    }

    /// Confidence used for scoring; a missing score counts as 1.0.
    pub fn confidence(&self) -> f64 {
        self.score.unwrap_or(1.0)
    }

    /// The 3D box, when the stored dimensions describe one.
    pub fn box3d(&self) -> Option<Box3D> {
        let [h, w, l] = self.dimensions;
        Box3D::new(self.location, [h, w, l], self.rotation_y).ok()
    }
}

/// Detections of one sequence grouped by frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceDetections {
    pub sequence_id: String,
    pub frames: BTreeMap<u32, Vec<Detection>>,
}

impl SequenceDetections {
    pub fn new(sequence_id: impl Into<String>) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            frames: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, det: Detection) {
        self.frames.entry(det.frame).or_default().push(det);
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn detection_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    /// Inclusive (first, last) frame index, if any.
    pub fn frame_span(&self) -> Option<(u32, u32)> {
        let first = *self.frames.keys().next()?;
        let last = *self.frames.keys().next_back()?;
        Some((first, last))
    }
}
