//! Offline end-to-end simulation.
//!
//! Replays a recorded walk in three phases: resolve the spoken destination
//! against the map, run perception over each recorded stereo frame, and
//! speak one guidance line per frame. Perception failures degrade to an
//! audible "BEEP" line and the run continues; a destination that cannot be
//! resolved beeps once and ends the run. A timing footer reports per-stage
//! averages.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sightline_core::calib::parse_rig_report;
use sightline_core::detect::{detect, report_objects, DEFAULT_MIN_CONFIDENCE};
use sightline_core::guide::compose_guidance;
use sightline_core::media::{decode_pgm, load_label_map, parse_annotation_csv, GrayImage, LabelMap};
use sightline_core::route::{
    generate_instructions, geocode, parse_route_graph, shortest_path, RouteStep,
};
use sightline_core::stereo::{compute_disparity, depth_map, MatchParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("config is missing a {what} entry")]
    Missing { what: &'static str },
    #[error("{role} file not found: {path}")]
    Unresolvable { role: &'static str, path: PathBuf },
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Everything a simulation run needs, with all paths already resolved
/// relative to the config file and checked to exist.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub calibration: PathBuf,
    /// Left/right image per recorded step. Frame N uses annotation id "N".
    pub frames: Vec<(PathBuf, PathBuf)>,
    pub annotations: PathBuf,
    /// Label vocabulary override; the built-in 90-class map when absent.
    pub labels: Option<PathBuf>,
    pub graph: PathBuf,
    pub source: u64,
    pub destination: String,
}

impl SimulationConfig {
    /// Parses the line-oriented config:
    ///
    /// ```text
    /// calibration,rig.txt
    /// frame,step0_left.pgm,step0_right.pgm
    /// frame,step1_left.pgm,step1_right.pgm
    /// annotations,detections.csv
    /// labels,labels.csv
    /// graph,campus.txt
    /// source,10
    /// destination,Library
    /// ```
    ///
    /// Relative paths resolve against the config file's directory. `labels`
    /// is optional; everything else is required, and every referenced file
    /// must exist before the run starts.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut calibration = None;
        let mut frames = Vec::new();
        let mut annotations = None;
        let mut labels = None;
        let mut graph = None;
        let mut source = None;
        let mut destination = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') {
                continue;
            }
            let (key, rest) = row.split_once(',').ok_or_else(|| ConfigError::BadLine {
                line,
                reason: "expected key,value".into(),
            })?;
            match key {
                "calibration" => calibration = Some(resolve(rest)),
                "annotations" => annotations = Some(resolve(rest)),
                "labels" => labels = Some(resolve(rest)),
                "graph" => graph = Some(resolve(rest)),
                "destination" => destination = Some(rest.trim().to_string()),
                "source" => {
                    source = Some(rest.trim().parse::<u64>().map_err(|_| {
                        ConfigError::BadLine {
                            line,
                            reason: format!("source node id {rest:?} is not an integer"),
                        }
                    })?);
                }
                "frame" => {
                    let (left, right) =
                        rest.split_once(',').ok_or_else(|| ConfigError::BadLine {
                            line,
                            reason: "expected frame,<left.pgm>,<right.pgm>".into(),
                        })?;
                    frames.push((resolve(left), resolve(right)));
                }
                other => {
                    return Err(ConfigError::BadLine {
                        line,
                        reason: format!("unknown key {other:?}"),
                    });
                }
            }
        }

        let cfg = Self {
            calibration: calibration.ok_or(ConfigError::Missing {
                what: "calibration",
            })?,
            frames,
            annotations: annotations.ok_or(ConfigError::Missing {
                what: "annotations",
            })?,
            labels,
            graph: graph.ok_or(ConfigError::Missing { what: "graph" })?,
            source: source.ok_or(ConfigError::Missing { what: "source" })?,
            destination: destination.ok_or(ConfigError::Missing {
                what: "destination",
            })?,
        };
        if cfg.frames.is_empty() {
            return Err(ConfigError::Missing { what: "frame" });
        }

        let mut referenced: Vec<(&'static str, &PathBuf)> = vec![
            ("calibration", &cfg.calibration),
            ("annotations", &cfg.annotations),
            ("graph", &cfg.graph),
        ];
        if let Some(l) = &cfg.labels {
            referenced.push(("labels", l));
        }
        for (left, right) in &cfg.frames {
            referenced.push(("frame image", left));
            referenced.push(("frame image", right));
        }
        for (role, p) in referenced {
            if !p.is_file() {
                return Err(ConfigError::Unresolvable {
                    role,
                    path: p.clone(),
                });
            }
        }
        Ok(cfg)
    }
}

/// Per-stage average seconds, in fixed row order; the final row is the whole
/// run's wall clock.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    rows: Vec<(String, f64)>,
}

pub const TIMING_ROWS: [&str; 5] = [
    "setup",
    "disparity+depth",
    "image load",
    "detection",
    "Cumulative time",
];

impl TimingReport {
    fn new(setup: f64, disparity_depth: f64, image_load: f64, detection: f64, total: f64) -> Self {
        let values = [setup, disparity_depth, image_load, detection, total];
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        debug_assert!(values[..4].iter().all(|v| *v <= total));
        Self {
            rows: TIMING_ROWS
                .iter()
                .zip(values)
                .map(|(name, v)| ((*name).to_string(), v))
                .collect(),
        }
    }

    pub fn rows(&self) -> &[(String, f64)] {
        &self.rows
    }

    /// Millisecond-precision `task,seconds` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,seconds\n");
        for (name, secs) in &self.rows {
            let _ = writeln!(out, "{name},{secs:.3}");
        }
        out
    }
}

/// What a run did, for exit-code and test purposes; the transcript itself
/// goes to the writer as the run progresses.
#[derive(Debug)]
pub struct SimOutcome {
    /// False when the destination could not be resolved to a reachable node.
    pub destination_ok: bool,
    pub speak_count: usize,
    pub beep_count: usize,
    pub timing: TimingReport,
}

struct StageClock {
    total: f64,
    completed: u32,
}

impl StageClock {
    fn new() -> Self {
        Self {
            total: 0.0,
            completed: 0,
        }
    }

    fn run<T, E>(&mut self, f: impl FnOnce() -> Result<T, E>) -> Result<T, E> {
        let start = Instant::now();
        let result = f();
        self.total += start.elapsed().as_secs_f64();
        if result.is_ok() {
            self.completed += 1;
        }
        result
    }

    fn average(&self) -> f64 {
        if self.completed == 0 {
            0.0
        } else {
            self.total / f64::from(self.completed)
        }
    }
}

fn load_frame(left: &Path, right: &Path) -> Result<(GrayImage, GrayImage), String> {
    let read = |p: &Path| -> Result<GrayImage, String> {
        let bytes = fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
        decode_pgm(&bytes).map_err(|e| format!("{}: {e}", p.display()))
    };
    Ok((read(left)?, read(right)?))
}

/// Runs the three phases against `out`, one transcript line at a time.
///
/// Every line is one of `BEEP`, `SPEAK[rate=<r>]: <text>`, or a trailing
/// `timing,<task>,<seconds>` footer row. The outcome's `destination_ok`
/// drives the process exit code; per-frame failures do not.
pub fn run_simulation(
    cfg: &SimulationConfig,
    out: &mut dyn Write,
) -> anyhow::Result<SimOutcome> {
    let run_start = Instant::now();
    let mut speak_count = 0usize;
    let mut beep_count = 0usize;

    // Asset loading; failures here are config problems, not beeps.
    let setup_start = Instant::now();
    let (rig, _rms) = parse_rig_report(&fs::read_to_string(&cfg.calibration)?)?;
    let label_map = match &cfg.labels {
        Some(path) => load_label_map(&fs::read_to_string(path)?)?,
        None => LabelMap::default(),
    };
    let annotations = parse_annotation_csv(&fs::read_to_string(&cfg.annotations)?, &label_map)?;
    let graph = parse_route_graph(&fs::read_to_string(&cfg.graph)?)?;
    let setup_secs = setup_start.elapsed().as_secs_f64();

    // Phase 1: resolve the destination. One beep and done if that fails.
    let steps = match plan_route(&graph, cfg.source, &cfg.destination) {
        Ok(steps) => steps,
        Err(_) => {
            writeln!(out, "BEEP")?;
            beep_count += 1;
            let timing = TimingReport::new(
                setup_secs,
                0.0,
                0.0,
                0.0,
                run_start.elapsed().as_secs_f64(),
            );
            write_timing(out, &timing)?;
            return Ok(SimOutcome {
                destination_ok: false,
                speak_count,
                beep_count,
                timing,
            });
        }
    };

    let params = MatchParams::default();
    let mut load_clock = StageClock::new();
    let mut stereo_clock = StageClock::new();
    let mut detect_clock = StageClock::new();

    // Phases 2 and 3, interleaved per frame: perceive, then speak.
    for (idx, (left_path, right_path)) in cfg.frames.iter().enumerate() {
        let step = &steps[idx.min(steps.len() - 1)];

        let perceived = load_clock
            .run(|| load_frame(left_path, right_path))
            .and_then(|(left, right)| {
                stereo_clock.run(|| {
                    compute_disparity(&left, &right, &params)
                        .map(|d| depth_map(&d, &rig))
                        .map_err(|e| e.to_string())
                })
            })
            .map(|depth| {
                detect_clock.run(|| -> Result<_, ()> {
                    let detections =
                        detect(&idx.to_string(), &annotations, DEFAULT_MIN_CONFIDENCE);
                    Ok(report_objects(&detections, &depth))
                })
            });

        match perceived {
            Ok(Ok(reports)) => {
                let message = compose_guidance(step, &reports);
                writeln!(
                    out,
                    "SPEAK[rate={}]: {}",
                    message.speaking_rate, message.text
                )?;
                speak_count += 1;
            }
            _ => {
                writeln!(out, "BEEP")?;
                beep_count += 1;
            }
        }
    }

    let timing = TimingReport::new(
        setup_secs,
        stereo_clock.average(),
        load_clock.average(),
        detect_clock.average(),
        run_start.elapsed().as_secs_f64(),
    );
    write_timing(out, &timing)?;
    Ok(SimOutcome {
        destination_ok: true,
        speak_count,
        beep_count,
        timing,
    })
}

fn plan_route(
    graph: &sightline_core::route::RouteGraph,
    source: u64,
    destination: &str,
) -> Result<Vec<RouteStep>, sightline_core::route::RouteError> {
    let dst = geocode(graph, destination)?;
    let path = shortest_path(graph, source, dst)?;
    Ok(generate_instructions(graph, &path.nodes))
}

fn write_timing(out: &mut dyn Write, timing: &TimingReport) -> std::io::Result<()> {
    for (task, secs) in timing.rows() {
        writeln!(out, "timing,{task},{secs:.3}")?;
    }
    Ok(())
}
