//! Object detection boundary.
//!
//! The real system runs a 90-class neural detector per frame. Here the
//! boundary is a trait, and the shipped implementation replays recorded
//! annotations so the rest of the pipeline (ranging, guidance, wire) is
//! exercised exactly as it would be behind a live model.

use crate::media::AnnotationSet;
use crate::stereo::{object_distance, BBox, DepthMap};

pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;

/// One detected object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub label: String,
    pub bbox: BBox,
    pub confidence: f64,
}

/// A detection plus how far away it is. `distance_m` is `None` when ranging
/// failed (no valid depth under the box); such objects are still reported,
/// the user must be warned either way.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectReport {
    pub label: String,
    pub distance_m: Option<f64>,
    pub bbox: BBox,
}

/// Anything that can produce per-frame detections.
pub trait Detector {
    /// Detections for one frame with confidence at least `min_confidence`,
    /// strongest first. Unknown frames yield an empty list.
    fn detect(&self, frame_id: &str, min_confidence: f64) -> Vec<Detection>;
}

impl Detector for AnnotationSet {
    fn detect(&self, frame_id: &str, min_confidence: f64) -> Vec<Detection> {
        detect(frame_id, self, min_confidence)
    }
}

/// Filters one frame's annotations by confidence and orders them strongest
/// first, ties broken by (label, x, y) so the order is total.
pub fn detect(frame_id: &str, source: &AnnotationSet, min_confidence: f64) -> Vec<Detection> {
    let mut out: Vec<Detection> = source
        .frame(frame_id)
        .iter()
        .filter(|d| d.confidence >= min_confidence)
        .cloned()
        .collect();
    out.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.bbox.x.cmp(&b.bbox.x))
            .then_with(|| a.bbox.y.cmp(&b.bbox.y))
    });
    out
}

/// Ranges every detection against a depth map. Length and order of the input
/// are preserved; ranging failures degrade to an unknown distance.
pub fn report_objects(detections: &[Detection], depth: &DepthMap) -> Vec<ObjectReport> {
    detections
        .iter()
        .map(|d| ObjectReport {
            label: d.label.clone(),
            distance_m: object_distance(depth, &d.bbox).ok(),
            bbox: d.bbox,
        })
        .collect()
}
