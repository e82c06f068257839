//! Detection annotations and the label vocabulary.
//!
//! Annotations stand in for a live detector: one CSV line per detected
//! object, `frame_id,label,x,y,w,h,confidence`. The label map is
//! `id,label` per line; the built-in default carries the 90-class everyday
//! object vocabulary the detection stage is trained on.

use std::collections::{BTreeMap, HashMap};

use super::FormatError;
use crate::detect::Detection;
use crate::stereo::BBox;

/// Bidirectional label vocabulary: numeric wire id to human-readable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    by_id: BTreeMap<u16, String>,
    by_name: HashMap<String, u16>,
}

impl LabelMap {
    pub fn id_of(&self, label: &str) -> Option<u16> {
        self.by_name.get(label).copied()
    }

    pub fn label_of(&self, id: u16) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.by_name.contains_key(label)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Entries ordered by id.
    pub fn iter(&self) -> impl Iterator<Item = (u16, &str)> {
        self.by_id.iter().map(|(id, name)| (*id, name.as_str()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (id, name) in self.iter() {
            out.push_str(&format!("{id},{name}\n"));
        }
        out
    }
}

impl Default for LabelMap {
    /// The 90-label everyday-object vocabulary.
    fn default() -> Self {
        let mut by_id = BTreeMap::new();
        let mut by_name = HashMap::new();
        for (id, name) in DEFAULT_LABELS {
            by_id.insert(*id, (*name).to_owned());
            by_name.insert((*name).to_owned(), *id);
        }
        Self { by_id, by_name }
    }
}

pub fn load_label_map(text: &str) -> Result<LabelMap, FormatError> {
    let mut by_id = BTreeMap::new();
    let mut by_name = HashMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_str, name) = line.split_once(',').ok_or_else(|| FormatError::BadRecord {
            line: line_no,
            reason: "expected \"id,label\"".into(),
        })?;
        let id: u16 = id_str.trim().parse().map_err(|_| FormatError::BadRecord {
            line: line_no,
            reason: format!("bad label id: {id_str:?}"),
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(FormatError::BadRecord {
                line: line_no,
                reason: "empty label".into(),
            });
        }
        if by_id.contains_key(&id) {
            return Err(FormatError::DuplicateLabelId { line: line_no, id });
        }
        if by_name.contains_key(name) {
            return Err(FormatError::DuplicateLabelName {
                line: line_no,
                label: name.to_owned(),
            });
        }
        by_id.insert(id, name.to_owned());
        by_name.insert(name.to_owned(), id);
    }
    Ok(LabelMap { by_id, by_name })
}

/// Detections grouped by frame, in file order within a frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    frames: BTreeMap<String, Vec<Detection>>,
}

impl AnnotationSet {
    /// Detections recorded for a frame; empty for frames never annotated.
    pub fn frame(&self, frame_id: &str) -> &[Detection] {
        self.frames.get(frame_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn frames(&self) -> impl Iterator<Item = (&str, &[Detection])> {
        self.frames.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

pub fn parse_annotation_csv(text: &str, labels: &LabelMap) -> Result<AnnotationSet, FormatError> {
    let mut frames: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(FormatError::BadRecord {
                line: line_no,
                reason: format!(
                    "expected \"frame_id,label,x,y,w,h,confidence\", got {} fields",
                    fields.len()
                ),
            });
        }
        let frame_id = fields[0];
        if frame_id.is_empty() {
            return Err(FormatError::BadRecord {
                line: line_no,
                reason: "empty frame id".into(),
            });
        }
        let label = fields[1];
        if !labels.contains(label) {
            return Err(FormatError::UnknownLabel {
                line: line_no,
                label: label.to_owned(),
            });
        }
        let x: i64 = parse_num(fields[2], "x", line_no)?;
        let y: i64 = parse_num(fields[3], "y", line_no)?;
        let w: u32 = parse_num(fields[4], "w", line_no)?;
        let h: u32 = parse_num(fields[5], "h", line_no)?;
        let bbox = BBox::new(x, y, w, h).map_err(|e| FormatError::BadBBox {
            line: line_no,
            reason: e.to_string(),
        })?;
        let confidence: f64 = parse_num(fields[6], "confidence", line_no)?;
        if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
            return Err(FormatError::BadConfidence {
                line: line_no,
                value: confidence,
            });
        }
        frames.entry(frame_id.to_owned()).or_default().push(Detection {
            label: label.to_owned(),
            bbox,
            confidence,
        });
    }
    Ok(AnnotationSet { frames })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T, FormatError> {
    s.parse().map_err(|_| FormatError::BadRecord {
        line,
        reason: format!("bad {what}: {s:?}"),
    })
}

const DEFAULT_LABELS: &[(u16, &str)] = &[
    (1, "person"),
    (2, "bicycle"),
    (3, "car"),
    (4, "motorcycle"),
    (5, "airplane"),
    (6, "bus"),
    (7, "train"),
    (8, "truck"),
    (9, "boat"),
    (10, "traffic light"),
    (11, "fire hydrant"),
    (12, "street sign"),
    (13, "stop sign"),
    (14, "parking meter"),
    (15, "bench"),
    (16, "bird"),
    (17, "cat"),
    (18, "dog"),
    (19, "horse"),
    (20, "sheep"),
    (21, "cow"),
    (22, "elephant"),
    (23, "bear"),
    (24, "zebra"),
    (25, "giraffe"),
    (26, "hat"),
    (27, "backpack"),
    (28, "umbrella"),
    (29, "shoe"),
    (30, "eye glasses"),
    (31, "handbag"),
    (32, "tie"),
    (33, "suitcase"),
    (34, "frisbee"),
    (35, "skis"),
    (36, "snowboard"),
    (37, "sports ball"),
    (38, "kite"),
    (39, "baseball bat"),
    (40, "baseball glove"),
    (41, "skateboard"),
    (42, "surfboard"),
    (43, "tennis racket"),
    (44, "bottle"),
    (45, "plate"),
    (46, "wine glass"),
    (47, "cup"),
    (48, "fork"),
    (49, "knife"),
    (50, "spoon"),
    (51, "bowl"),
    (52, "banana"),
    (53, "apple"),
    (54, "sandwich"),
    (55, "orange"),
    (56, "broccoli"),
    (57, "carrot"),
    (58, "hot dog"),
    (59, "pizza"),
    (60, "donut"),
    (61, "cake"),
    (62, "chair"),
    (63, "couch"),
    (64, "potted plant"),
    (65, "bed"),
    (66, "mirror"),
    (67, "dining table"),
    (68, "window"),
    (69, "desk"),
    (70, "toilet"),
    (71, "door"),
    (72, "tv"),
    (73, "laptop"),
    (74, "mouse"),
    (75, "remote"),
    (76, "keyboard"),
    (77, "cell phone"),
    (78, "microwave"),
    (79, "oven"),
    (80, "toaster"),
    (81, "sink"),
    (82, "refrigerator"),
    (83, "blender"),
    (84, "book"),
    (85, "clock"),
    (86, "vase"),
    (87, "scissors"),
    (88, "teddy bear"),
    (89, "hair drier"),
    (90, "toothbrush"),
];
