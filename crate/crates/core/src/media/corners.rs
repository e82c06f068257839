//! Checkerboard corner observations as CSV.
//!
//! First line declares the board, every following record is one detected
//! inner corner:
//!
//! ```text
//! board,<cols>,<rows>,<square_size_m>
//! view,<view_id>,<L|R>,<corner_index>,<u_px>,<v_px>
//! ```
//!
//! Corner index `i` maps to the board point at column `i % cols`, row
//! `i / cols`. Blank lines and `#` comments are skipped. A view is only
//! accepted when all `cols*rows` corners are present.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector2;

use super::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CameraId {
    Left,
    Right,
}

impl CameraId {
    pub fn tag(self) -> &'static str {
        match self {
            CameraId::Left => "L",
            CameraId::Right => "R",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        match s {
            "L" => Some(CameraId::Left),
            "R" => Some(CameraId::Right),
            _ => None,
        }
    }
}

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Planar checkerboard geometry: inner-corner grid plus physical square size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardModel {
    pub cols: usize,
    pub rows: usize,
    pub square_size_m: f64,
}

impl BoardModel {
    pub fn new(cols: usize, rows: usize, square_size_m: f64) -> Result<Self, FormatError> {
        if cols < 2 || rows < 2 || !(square_size_m > 0.0) || !square_size_m.is_finite() {
            return Err(FormatError::BadHeader {
                reason: format!(
                    "board must have at least 2x2 inner corners and positive square size, got {cols}x{rows} at {square_size_m}"
                ),
            });
        }
        Ok(Self {
            cols,
            rows,
            square_size_m,
        })
    }

    pub fn corner_count(&self) -> usize {
        self.cols * self.rows
    }
}

/// All corners of one board sighting by one camera, indexed row-major to
/// match the board point layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewObservation {
    pub view_id: u32,
    pub camera: CameraId,
    pub corners: Vec<Vector2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerObservationSet {
    pub board: BoardModel,
    pub views: Vec<ViewObservation>,
}

impl CornerObservationSet {
    /// Views seen by one camera, in file order.
    pub fn camera_views(&self, camera: CameraId) -> impl Iterator<Item = &ViewObservation> {
        self.views.iter().filter(move |v| v.camera == camera)
    }

    /// Subset containing only one camera's views.
    pub fn select_camera(&self, camera: CameraId) -> CornerObservationSet {
        CornerObservationSet {
            board: self.board,
            views: self.camera_views(camera).cloned().collect(),
        }
    }
}

pub fn parse_corner_csv(text: &str) -> Result<CornerObservationSet, FormatError> {
    let mut board: Option<BoardModel> = None;
    let mut pending: BTreeMap<(u32, CameraId), Vec<Option<Vector2<f64>>>> = BTreeMap::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields[0] {
            "board" => {
                if board.is_some() {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: "second board header".into(),
                    });
                }
                if fields.len() != 4 {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: format!("board header needs 4 fields, got {}", fields.len()),
                    });
                }
                let cols = parse_field::<usize>(fields[1], "cols", line_no)?;
                let rows = parse_field::<usize>(fields[2], "rows", line_no)?;
                let square = parse_field::<f64>(fields[3], "square size", line_no)?;
                if cols < 2 || rows < 2 {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: format!("board needs at least 2x2 inner corners, got {cols}x{rows}"),
                    });
                }
                if !(square > 0.0) || !square.is_finite() {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: format!("square size must be positive, got {square}"),
                    });
                }
                board = Some(BoardModel {
                    cols,
                    rows,
                    square_size_m: square,
                });
            }
            "view" => {
                let board = board.as_ref().ok_or(FormatError::MissingBoardHeader)?;
                if fields.len() != 6 {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: format!("view record needs 6 fields, got {}", fields.len()),
                    });
                }
                let view_id = parse_field::<u32>(fields[1], "view id", line_no)?;
                let camera = CameraId::from_tag(fields[2]).ok_or_else(|| FormatError::BadRecord {
                    line: line_no,
                    reason: format!("camera must be L or R, got {:?}", fields[2]),
                })?;
                let index = parse_field::<usize>(fields[3], "corner index", line_no)?;
                if index >= board.corner_count() {
                    return Err(FormatError::BadRecord {
                        line: line_no,
                        reason: format!(
                            "corner index {index} out of range for a {}x{} board",
                            board.cols, board.rows
                        ),
                    });
                }
                let u = parse_field::<f64>(fields[4], "u", line_no)?;
                let v = parse_field::<f64>(fields[5], "v", line_no)?;
                if !u.is_finite() || !v.is_finite() {
                    return Err(FormatError::NonFiniteCoordinate { line: line_no });
                }
                let slots = pending
                    .entry((view_id, camera))
                    .or_insert_with(|| vec![None; board.corner_count()]);
                if slots[index].is_some() {
                    return Err(FormatError::DuplicateCorner {
                        line: line_no,
                        view_id,
                        index,
                    });
                }
                slots[index] = Some(Vector2::new(u, v));
            }
            other => {
                return Err(FormatError::BadRecord {
                    line: line_no,
                    reason: format!("unknown record type {other:?}"),
                });
            }
        }
    }

    let board = board.ok_or(FormatError::MissingBoardHeader)?;
    let mut views = Vec::with_capacity(pending.len());
    for ((view_id, camera), slots) in pending {
        let got = slots.iter().filter(|s| s.is_some()).count();
        if got != board.corner_count() {
            return Err(FormatError::IncompleteView {
                view_id,
                camera,
                expected: board.corner_count(),
                got,
            });
        }
        views.push(ViewObservation {
            view_id,
            camera,
            corners: slots.into_iter().flatten().collect(),
        });
    }
    Ok(CornerObservationSet { board, views })
}

/// Canonical emitter: board line, then records sorted by view, camera, index.
/// Coordinates print with `{}` so they reparse to the same f64 bit pattern.
pub fn format_corner_csv(set: &CornerObservationSet) -> String {
    let mut out = format!(
        "board,{},{},{}\n",
        set.board.cols, set.board.rows, set.board.square_size_m
    );
    let mut views: Vec<&ViewObservation> = set.views.iter().collect();
    views.sort_by_key(|v| (v.view_id, v.camera));
    for view in views {
        for (index, corner) in view.corners.iter().enumerate() {
            out.push_str(&format!(
                "view,{},{},{},{},{}\n",
                view.view_id,
                view.camera.tag(),
                index,
                corner.x,
                corner.y
            ));
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T, FormatError> {
    s.parse().map_err(|_| FormatError::BadRecord {
        line,
        reason: format!("bad {what}: {s:?}"),
    })
}
