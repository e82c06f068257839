//! Guidance sentence composition.
//!
//! One route step plus the ranged detections become a single spoken-style
//! line: "Head <instruction> but beware there is <label> is at <feet> feet",
//! the beware clause repeated per object joined by " and ". The clause
//! grammar is deliberately awkward; downstream golden transcripts freeze it
//! byte-for-byte, so it must never be "fixed" here.

use thiserror::Error;

use crate::detect::ObjectReport;
use crate::route::RouteStep;

pub const FEET_PER_METER: f64 = 3.28084;

/// Guidance speaks a bit slower than the nominal engine rate.
pub const DEFAULT_SPEAKING_RATE: f64 = 0.8;

#[derive(Debug, Error)]
pub enum GuideError {
    #[error("distance {meters} m is negative")]
    NegativeDistance { meters: f64 },
    #[error("speaking rate {rate} outside (0, 1]")]
    BadSpeakingRate { rate: f64 },
    #[error("guidance text is empty")]
    EmptyText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceMessage {
    pub text: String,
    pub speaking_rate: f64,
}

impl GuidanceMessage {
    pub fn new(text: String, speaking_rate: f64) -> Result<Self, GuideError> {
        if text.is_empty() {
            return Err(GuideError::EmptyText);
        }
        if !(speaking_rate > 0.0 && speaking_rate <= 1.0) {
            return Err(GuideError::BadSpeakingRate {
                rate: speaking_rate,
            });
        }
        Ok(Self {
            text,
            speaking_rate,
        })
    }
}

/// Whole feet, rounded half away from zero.
pub fn meters_to_feet(meters: f64) -> Result<u64, GuideError> {
    if !(meters >= 0.0) {
        return Err(GuideError::NegativeDistance { meters });
    }
    Ok((meters * FEET_PER_METER).round() as u64)
}

/// Fills the guidance template from one route step and the object reports.
///
/// Objects are spoken nearest first; objects whose ranging failed come last
/// as "is at unknown distance". The result never depends on input order. A
/// step that already leads with "Head " (the first step of a route does) is
/// not doubled.
pub fn compose_guidance(step: &RouteStep, reports: &[ObjectReport]) -> GuidanceMessage {
    let instruction = step.text.strip_prefix("Head ").unwrap_or(&step.text);

    let mut ordered: Vec<&ObjectReport> = reports.iter().collect();
    ordered.sort_by(|a, b| {
        let key = |r: &ObjectReport| match r.distance_m {
            // Treat nonsense distances (never produced by ranging) as unknown.
            Some(d) if d.is_finite() && d >= 0.0 => (0u8, d),
            _ => (1u8, 0.0),
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then_with(|| ka.1.total_cmp(&kb.1))
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.bbox.x.cmp(&b.bbox.x))
            .then_with(|| a.bbox.y.cmp(&b.bbox.y))
    });

    let mut text = format!("Head {instruction}");
    for (i, report) in ordered.iter().enumerate() {
        let joiner = if i == 0 { " " } else { " and " };
        let clause = match report.distance_m {
            Some(d) if d.is_finite() && d >= 0.0 => {
                let feet = meters_to_feet(d).expect("distance checked non-negative");
                format!("but beware there is {} is at {} feet", report.label, feet)
            }
            _ => format!("but beware there is {} is at unknown distance", report.label),
        };
        text.push_str(joiner);
        text.push_str(&clause);
    }

    GuidanceMessage {
        text,
        speaking_rate: DEFAULT_SPEAKING_RATE,
    }
}
