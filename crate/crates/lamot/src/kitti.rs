//! KITTI tracking label/detection files.
//!
//! One object per line, whitespace separated:
//! `frame track_id type truncated occluded alpha left top right bottom
//! height width length x y z rotation_y [score]`.
//!
//! Reals are written with Rust's shortest round-trip formatting, so
//! parsing what was written reproduces every stored value bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use lamot_core::metrics::FrameBoxes;
use lamot_core::{Box2D, Detection, ObjectAttributes, SequenceDetections, Tracklet};
use thiserror::Error;

pub const LABEL_FIELDS: usize = 17;
pub const DETECTION_FIELDS: usize = 18;

const FIELD_NAMES: [&str; DETECTION_FIELDS] = [
    "frame",
    "track_id",
    "type",
    "truncated",
    "occluded",
    "alpha",
    "left",
    "top",
    "right",
    "bottom",
    "height",
    "width",
    "length",
    "x",
    "y",
    "z",
    "rotation_y",
    "score",
];

#[derive(Debug, Error)]
pub enum KittiError {
    #[error("line {line}: expected {LABEL_FIELDS} or {DETECTION_FIELDS} fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: field `{field}` has invalid value `{value}`")]
    Field {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("tracklet without an assigned id cannot be written")]
    UnassignedId,
    #[error("class name `{0}` is not a single token")]
    BadClassName(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObject {
    pub frame: u32,
    /// -1 when absent.
    pub track_id: i64,
    pub class_name: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox: Box2D,
    pub dimensions: [f64; 3],
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl LabeledObject {
    pub fn to_detection(&self) -> Detection {
        Detection {
            frame: self.frame,
            class_name: self.class_name.clone(),
            attributes: ObjectAttributes {
                truncated: self.truncated,
                occluded: self.occluded,
                alpha: self.alpha,
            },
            bbox: self.bbox,
            dimensions: self.dimensions,
            location: self.location,
            rotation_y: self.rotation_y,
            score: self.score,
            feature: None,
        }
    }

    pub fn from_detection(det: &Detection, track_id: i64) -> Self {
        Self {
            frame: det.frame,
            track_id,
            class_name: det.class_name.clone(),
            truncated: det.attributes.truncated,
            occluded: det.attributes.occluded,
            alpha: det.attributes.alpha,
            bbox: det.bbox,
            dimensions: det.dimensions,
            location: det.location,
            rotation_y: det.rotation_y,
            score: det.score,
        }
    }
}

fn field<T: std::str::FromStr>(tokens: &[&str], idx: usize, line: usize) -> Result<T, KittiError> {
    tokens[idx].parse::<T>().map_err(|_| KittiError::Field {
        line,
        field: FIELD_NAMES[idx],
        value: tokens[idx].to_string(),
    })
}

fn real(tokens: &[&str], idx: usize, line: usize) -> Result<f64, KittiError> {
    let v: f64 = field(tokens, idx, line)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KittiError::Field {
            line,
            field: FIELD_NAMES[idx],
            value: tokens[idx].to_string(),
        })
    }
}

/// Parses one object line; `line` is the 1-based line number used in errors.
pub fn parse_label_line(text: &str, line: usize) -> Result<LabeledObject, KittiError> {
    let t: Vec<&str> = text.split_whitespace().collect();
    if t.len() != LABEL_FIELDS && t.len() != DETECTION_FIELDS {
        return Err(KittiError::FieldCount {
            line,
            found: t.len(),
        });
    }
    let bbox = Box2D {
        left: real(&t, 6, line)?,
        top: real(&t, 7, line)?,
        right: real(&t, 8, line)?,
        bottom: real(&t, 9, line)?,
    };
    if !bbox.is_valid() {
        return Err(KittiError::Invalid {
            line,
            reason: format!(
                "bbox ({}, {}, {}, {}) has left > right or top > bottom",
                bbox.left, bbox.top, bbox.right, bbox.bottom
            ),
        });
    }
    Ok(LabeledObject {
        frame: field(&t, 0, line)?,
        track_id: field(&t, 1, line)?,
        class_name: t[2].to_string(),
        truncated: real(&t, 3, line)?,
        occluded: field(&t, 4, line)?,
        alpha: real(&t, 5, line)?,
        bbox,
        dimensions: [real(&t, 10, line)?, real(&t, 11, line)?, real(&t, 12, line)?],
        location: [real(&t, 13, line)?, real(&t, 14, line)?, real(&t, 15, line)?],
        rotation_y: real(&t, 16, line)?,
        score: if t.len() == DETECTION_FIELDS {
            Some(real(&t, 17, line)?)
        } else {
            None
        },
    })
}

/// Objects of one sequence grouped by frame, file order kept within a frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSequence {
    pub sequence_id: String,
    pub frames: BTreeMap<u32, Vec<LabeledObject>>,
}

impl LabeledSequence {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn object_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn objects(&self) -> impl Iterator<Item = &LabeledObject> {
        self.frames.values().flatten()
    }

    /// Detections for the tracker; track ids are dropped.
    pub fn detections(&self) -> SequenceDetections {
        let mut seq = SequenceDetections::new(self.sequence_id.clone());
        for obj in self.objects() {
            seq.push(obj.to_detection());
        }
        seq
    }

    /// Identified 2D boxes for evaluation. Objects without a track id
    /// (negative ids, e.g. `DontCare` regions) are left out.
    pub fn boxes_by_frame(&self) -> FrameBoxes {
        let mut out = FrameBoxes::new();
        for (frame, objs) in &self.frames {
            out.insert(
                *frame,
                objs.iter()
                    .filter(|o| o.track_id >= 0)
                    .map(|o| (o.track_id, o.bbox))
                    .collect(),
            );
        }
        out
    }
}

/// Reads a whole file. Blank lines are skipped.
pub fn parse_sequence(
    source: impl BufRead,
    sequence_id: impl Into<String>,
) -> Result<LabeledSequence, KittiError> {
    let mut seq = LabeledSequence {
        sequence_id: sequence_id.into(),
        frames: BTreeMap::new(),
    };
    for (idx, text) in source.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let obj = parse_label_line(&text, idx + 1)?;
        seq.frames.entry(obj.frame).or_default().push(obj);
    }
    Ok(seq)
}

pub fn parse_str(text: &str, sequence_id: &str) -> Result<LabeledSequence, KittiError> {
    parse_sequence(text.as_bytes(), sequence_id)
}

/// One line, newline-terminated.
pub fn format_label_line(obj: &LabeledObject) -> Result<String, KittiError> {
    if obj.class_name.is_empty() || obj.class_name.chars().any(char::is_whitespace) {
        return Err(KittiError::BadClassName(obj.class_name.clone()));
    }
    let mut s = String::with_capacity(128);
    let [h, w, l] = obj.dimensions;
    let [x, y, z] = obj.location;
    let b = &obj.bbox;
    let _ = write!(
        s,
        "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
        obj.frame,
        obj.track_id,
        obj.class_name,
        obj.truncated,
        obj.occluded,
        obj.alpha,
        b.left,
        b.top,
        b.right,
        b.bottom,
        h,
        w,
        l,
        x,
        y,
        z,
        obj.rotation_y
    );
    if let Some(score) = obj.score {
        let _ = write!(s, " {score}");
    }
    s.push('\n');
    Ok(s)
}

/// Writes objects sorted by frame, then track id (stable for equal keys).
pub fn write_objects<'a>(
    objects: impl IntoIterator<Item = &'a LabeledObject>,
    mut sink: impl Write,
) -> Result<(), KittiError> {
    let mut objs: Vec<&LabeledObject> = objects.into_iter().collect();
    objs.sort_by_key(|o| (o.frame, o.track_id));
    for o in objs {
        sink.write_all(format_label_line(o)?.as_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

/// One line per (tracklet, frame), sorted by frame then track id.
pub fn write_tracking_results(tracks: &[Tracklet], sink: impl Write) -> Result<(), KittiError> {
    let mut objs = Vec::new();
    for t in tracks {
        let id = t.id.ok_or(KittiError::UnassignedId)?;
        let id = i64::try_from(id).map_err(|_| KittiError::UnassignedId)?;
        objs.extend(
            t.detections
                .iter()
                .map(|d| LabeledObject::from_detection(d, id)),
        );
    }
    write_objects(&objs, sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LABEL: &str = "0 2 Car 0 0 -1.57 100.0 150.0 200.0 250.0 1.5 1.6 3.9 2.0 1.5 30.0 -1.5";

    #[test]
    fn parses_label_line() {
        let o = parse_label_line(LABEL, 1).unwrap();
        assert_eq!(o.frame, 0);
        assert_eq!(o.track_id, 2);
        assert_eq!(o.class_name, "Car");
        assert_eq!(o.truncated, 0.0);
        assert_eq!(o.occluded, 0);
        assert_eq!(o.alpha, -1.57);
        assert_eq!(o.bbox, Box2D::new(100.0, 150.0, 200.0, 250.0).unwrap());
        assert_eq!(o.dimensions, [1.5, 1.6, 3.9]);
        assert_eq!(o.location, [2.0, 1.5, 30.0]);
        assert_eq!(o.rotation_y, -1.5);
        assert_eq!(o.score, None);
        assert_eq!(o.to_detection().confidence(), 1.0);
    }

    #[test]
    fn parses_detection_score() {
        let o = parse_label_line(&format!("{LABEL} 0.97"), 1).unwrap();
        assert_eq!(o.score, Some(0.97));
    }

    #[test]
    fn field_count_error_names_line() {
        let short: Vec<&str> = LABEL.split(' ').take(16).collect();
        let err = parse_label_line(&short.join(" "), 7).unwrap_err();
        assert!(matches!(err, KittiError::FieldCount { line: 7, found: 16 }));
        assert!(err.to_string().contains("line 7"));
    }

    #[test]
    fn bad_field_is_named() {
        let bad = LABEL.replace("-1.57", "abc");
        let err = parse_label_line(&bad, 3).unwrap_err();
        assert!(matches!(err, KittiError::Field { line: 3, field: "alpha", .. }));
        let bad = LABEL.replace("0 2 Car 0 0", "0 2 Car 0 x");
        assert!(matches!(
            parse_label_line(&bad, 1),
            Err(KittiError::Field { field: "occluded", .. })
        ));
        let inverted = LABEL.replace("100.0 150.0 200.0", "300.0 150.0 200.0");
        assert!(matches!(parse_label_line(&inverted, 1), Err(KittiError::Invalid { .. })));
    }

    #[test]
    fn sequence_grouping() {
        assert_eq!(parse_str("", "s").unwrap().frame_count(), 0);
        let text = format!(
            "{LABEL}\n{}\n{}\n",
            LABEL.replacen("0 2", "0 3", 1),
            LABEL.replacen("0 2", "3 2", 1)
        );
        let seq = parse_str(&text, "s").unwrap();
        assert_eq!(seq.frames[&0].len(), 2);
        assert_eq!(seq.frames[&3].len(), 1);
        assert_eq!(seq.frames[&0][1].track_id, 3);
    }

    #[test]
    fn sequence_error_cites_line() {
        let text = format!("{LABEL}\n{LABEL}\n{LABEL}\n{LABEL}\nbroken line\n");
        let err = parse_str(&text, "s").unwrap_err();
        assert!(matches!(err, KittiError::FieldCount { line: 5, .. }));
    }

    #[test]
    fn writes_tracklets() {
        let mut out = Vec::new();
        write_tracking_results(&[], &mut out).unwrap();
        assert!(out.is_empty());

        let o = parse_label_line(LABEL, 1).unwrap();
        let mut t = Tracklet::tentative(o.to_detection());
        let mut second = o.to_detection();
        second.frame = 1;
        t.detections.push(second);
        t.id = Some(9);
        write_tracking_results(&[t.clone()], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.split(' ').nth(1) == Some("9")));

        t.id = None;
        assert!(matches!(
            write_tracking_results(&[t], Vec::new()),
            Err(KittiError::UnassignedId)
        ));
    }
}
