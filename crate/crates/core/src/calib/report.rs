//! Calibration reports as line-oriented text.
//!
//! One `param,<name>,<value>` line per model parameter, one `rms_px,<value>`
//! line, and for mono reports a `coverage,<bucket>,<true|false>` line per
//! bucket. Values print with `{}` so they reparse bit-exactly. The rig form
//! is what the depth stage and the simulator load.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{CalibError, CalibrationReport, CameraIntrinsics, StereoCalibration, StereoRig};

pub fn format_mono_report(report: &CalibrationReport) -> String {
    let mut out = String::new();
    let k = &report.intrinsics;
    for (name, value) in [
        ("fx", k.fx),
        ("fy", k.fy),
        ("cx", k.cx),
        ("cy", k.cy),
        ("pixel_size_mm", k.pixel_size_mm),
    ] {
        out.push_str(&format!("param,{name},{value}\n"));
    }
    for (id, pose) in report.view_ids.iter().zip(&report.view_poses) {
        for (name, value) in [
            ("rx", pose.rotation.x),
            ("ry", pose.rotation.y),
            ("rz", pose.rotation.z),
            ("tx", pose.translation.x),
            ("ty", pose.translation.y),
            ("tz", pose.translation.z),
        ] {
            out.push_str(&format!("param,view.{id}.{name},{value}\n"));
        }
    }
    out.push_str(&format!("rms_px,{}\n", report.rms_px));
    for (bucket, filled) in report.coverage.entries() {
        out.push_str(&format!("coverage,{bucket},{filled}\n"));
    }
    out
}

pub fn format_rig_report(calib: &StereoCalibration) -> String {
    let mut out = String::new();
    let rig = &calib.rig;
    for (prefix, k) in [("left", &rig.left), ("right", &rig.right)] {
        for (name, value) in [
            ("fx", k.fx),
            ("fy", k.fy),
            ("cx", k.cx),
            ("cy", k.cy),
            ("pixel_size_mm", k.pixel_size_mm),
        ] {
            out.push_str(&format!("param,{prefix}.{name},{value}\n"));
        }
    }
    for (name, value) in [
        ("rel_rot.x", rig.relative_rotation.x),
        ("rel_rot.y", rig.relative_rotation.y),
        ("rel_rot.z", rig.relative_rotation.z),
        ("baseline.x", rig.baseline_vector.x),
        ("baseline.y", rig.baseline_vector.y),
        ("baseline.z", rig.baseline_vector.z),
    ] {
        out.push_str(&format!("param,{name},{value}\n"));
    }
    out.push_str(&format!("rms_px,{}\n", calib.rms_px));
    out
}

/// Loads a rig report. Unknown `param` names are ignored so reports may
/// carry extra parameters; malformed lines and missing rig parameters are
/// errors.
pub fn parse_rig_report(text: &str) -> Result<(StereoRig, f64), CalibError> {
    let mut params: HashMap<String, f64> = HashMap::new();
    let mut rms: Option<f64> = None;
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields.as_slice() {
            ["param", name, value] => {
                let value: f64 = value.parse().map_err(|_| CalibError::BadReport {
                    line: line_no,
                    reason: format!("bad value {value:?}"),
                })?;
                if !value.is_finite() {
                    return Err(CalibError::BadReport {
                        line: line_no,
                        reason: format!("non-finite value for {name}"),
                    });
                }
                params.insert((*name).to_owned(), value);
            }
            ["rms_px", value] => {
                rms = Some(value.parse().map_err(|_| CalibError::BadReport {
                    line: line_no,
                    reason: format!("bad rms {value:?}"),
                })?);
            }
            ["coverage", _, _] => {}
            _ => {
                return Err(CalibError::BadReport {
                    line: line_no,
                    reason: format!("unrecognized line {line:?}"),
                });
            }
        }
    }

    let get = |name: &str| -> Result<f64, CalibError> {
        params
            .get(name)
            .copied()
            .ok_or_else(|| CalibError::MissingParam { name: name.into() })
    };
    let camera = |prefix: &str| -> Result<CameraIntrinsics, CalibError> {
        CameraIntrinsics::new(
            get(&format!("{prefix}.fx"))?,
            get(&format!("{prefix}.fy"))?,
            get(&format!("{prefix}.cx"))?,
            get(&format!("{prefix}.cy"))?,
            get(&format!("{prefix}.pixel_size_mm"))?,
        )
    };
    let rig = StereoRig {
        left: camera("left")?,
        right: camera("right")?,
        relative_rotation: Vector3::new(
            get("rel_rot.x")?,
            get("rel_rot.y")?,
            get("rel_rot.z")?,
        ),
        baseline_vector: Vector3::new(
            get("baseline.x")?,
            get("baseline.y")?,
            get("baseline.z")?,
        ),
    };
    if rig.baseline() < 1e-6 {
        return Err(CalibError::DegenerateBaseline {
            baseline_m: rig.baseline(),
        });
    }
    let rms = rms.ok_or_else(|| CalibError::MissingParam {
        name: "rms_px".into(),
    })?;
    Ok((rig, rms))
}
