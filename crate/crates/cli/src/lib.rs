//! Command-line front end for the sightline pipeline.
//!
//! Each subcommand wraps one stage (calibration, disparity, depth, detection,
//! routing, guidance, the wire link) so stages can be run and inspected in
//! isolation; `simulate` chains them over a recorded walk. The library entry
//! point is [`run`], which the binary calls with locked stdout and which
//! returns the process exit code so tests can drive it in-process.

pub mod sim;

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sightline_core::calib::{calibrate_mono, calibrate_rig, format_mono_report, format_rig_report, parse_rig_report};
use sightline_core::detect::{detect, report_objects, ObjectReport, DEFAULT_MIN_CONFIDENCE};
use sightline_core::guide::{compose_guidance, DEFAULT_SPEAKING_RATE};
use sightline_core::media::{
    decode_dispmap, decode_pgm, encode_depthmap, encode_dispmap, load_label_map,
    parse_annotation_csv, parse_corner_csv, CameraId, LabelMap,
};
use sightline_core::route::{
    generate_instructions, geocode, parse_route_graph, shortest_path, RouteStep,
};
use sightline_core::stereo::{compute_disparity, depth_map, BBox, MatchParams};
use sightline_core::wire::{
    receive, serve, FrameKind, ReportBatchPayload, WireObject, DEFAULT_PORT,
    UNKNOWN_DISTANCE_MM,
};

use crate::sim::{run_simulation, SimulationConfig};

#[derive(Parser, Debug)]
#[command(name = "sightline", version, about = "Stereo-vision walking assistant toolchain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CameraArg {
    Left,
    Right,
}

impl From<CameraArg> for CameraId {
    fn from(c: CameraArg) -> Self {
        match c {
            CameraArg::Left => CameraId::Left,
            CameraArg::Right => CameraId::Right,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Calibrate a single camera from a corner observation CSV.
    Calibrate {
        /// Corner observation CSV (board header plus per-view corner rows).
        #[arg(long)]
        corners: PathBuf,
        /// Which camera's views to use.
        #[arg(long, value_enum, default_value = "left")]
        camera: CameraArg,
        /// Physical sensor pixel pitch in millimetres.
        #[arg(long, default_value_t = 0.003)]
        pixel_size_mm: f64,
        #[arg(long, default_value_t = 640)]
        image_width: u32,
        #[arg(long, default_value_t = 480)]
        image_height: u32,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate a stereo rig from a corner CSV holding both cameras' views.
    StereoCalibrate {
        #[arg(long)]
        corners: PathBuf,
        #[arg(long, default_value_t = 0.003)]
        pixel_size_mm: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-match a rectified pair into a disparity map.
    Disparity {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Output disparity container path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9)]
        window: u32,
        #[arg(long, default_value_t = 0)]
        min_disparity: u32,
        #[arg(long, default_value_t = 64)]
        max_disparity: u32,
        #[arg(long, default_value_t = 1.15)]
        uniqueness: f64,
    },
    /// Convert a disparity map to metric depth using a rig report.
    Depth {
        #[arg(long)]
        disparity: PathBuf,
        /// Rig calibration report, as written by stereo-calibrate.
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List detections for one frame, with distances when depth is supplied.
    Detect {
        /// Annotation CSV of frame_id,label,x,y,w,h,confidence rows.
        #[arg(long)]
        annotations: PathBuf,
        /// Label vocabulary CSV; the built-in map when omitted.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Frame id to look up.
        #[arg(long)]
        frame: String,
        /// Depth container for distance estimates.
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIN_CONFIDENCE)]
        min_confidence: f64,
    },
    /// Plan a walking route and print the instruction list.
    Route {
        /// Route graph file of node,... and edge,... lines.
        #[arg(long)]
        graph: PathBuf,
        /// Start node id.
        #[arg(long)]
        from: u64,
        /// Destination name, matched case-insensitively.
        #[arg(long)]
        to: String,
    },
    /// Compose one spoken guidance line from a step and nearby objects.
    Guide {
        /// Route step text, e.g. "Head north on Campus Walk".
        #[arg(long)]
        text: String,
        /// Nearby object as label or label:distance_m; repeatable.
        #[arg(long = "object")]
        objects: Vec<String>,
    },
    /// Serve object report batches from a file over TCP.
    Serve {
        #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        bind: String,
        /// Batch feed: frame_id,label_id,distance_mm,x,y,w,h rows; consecutive
        /// rows with the same frame_id form one batch.
        #[arg(long)]
        batches: PathBuf,
        /// Pause between batches.
        #[arg(long, default_value_t = 500)]
        interval_ms: u64,
    },
    /// Client-side interaction helpers.
    Client {
        #[command(subcommand)]
        action: ClientAction,
    },
    /// Replay a recorded walk end to end and print the spoken transcript.
    Simulate {
        #[command(flatten)]
        args: SimulateArgs,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Simulation config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Also write the timing table as CSV to this path.
    #[arg(long)]
    pub timing_csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ClientAction {
    /// Echo stdin lines as speech commands.
    SpeakInput,
    /// Read one line of user input and acknowledge it.
    GiveInput,
    /// Connect to a report server and print everything it sends.
    Navigate {
        #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        connect: String,
    },
}

/// Executes one parsed command, writing human-readable output to `out`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Calibrate {
            corners,
            camera,
            pixel_size_mm,
            image_width,
            image_height,
            out: dest,
        } => {
            let set = parse_corner_csv(&read_text(&corners)?)?;
            let report = calibrate_mono(&set, camera.into(), pixel_size_mm, (image_width, image_height))?;
            emit(out, dest.as_deref(), &format_mono_report(&report))?;
            Ok(0)
        }
        Command::StereoCalibrate {
            corners,
            pixel_size_mm,
            out: dest,
        } => {
            let set = parse_corner_csv(&read_text(&corners)?)?;
            let calib = calibrate_rig(&set, pixel_size_mm)?;
            emit(out, dest.as_deref(), &format_rig_report(&calib))?;
            Ok(0)
        }
        Command::Disparity {
            left,
            right,
            out: dest,
            window,
            min_disparity,
            max_disparity,
            uniqueness,
        } => {
            let left = decode_pgm(&read_bytes(&left)?)?;
            let right = decode_pgm(&read_bytes(&right)?)?;
            let params = MatchParams::new(window, min_disparity, max_disparity, uniqueness)?;
            let map = compute_disparity(&left, &right, &params)?;
            fs::write(&dest, encode_dispmap(&map))
                .with_context(|| format!("writing {}", dest.display()))?;
            writeln!(
                out,
                "disparity {}x{}: {} of {} pixels valid",
                map.width(),
                map.height(),
                map.valid_count(),
                map.pixel_count()
            )?;
            Ok(0)
        }
        Command::Depth {
            disparity,
            calibration,
            out: dest,
        } => {
            let map = decode_dispmap(&read_bytes(&disparity)?)?;
            let (rig, _) = parse_rig_report(&read_text(&calibration)?)?;
            let depth = depth_map(&map, &rig);
            fs::write(&dest, encode_depthmap(&depth))
                .with_context(|| format!("writing {}", dest.display()))?;
            writeln!(
                out,
                "depth {}x{}: {} of {} pixels valid",
                depth.width(),
                depth.height(),
                depth.valid_count(),
                depth.width() as usize * depth.height() as usize
            )?;
            Ok(0)
        }
        Command::Detect {
            annotations,
            labels,
            frame,
            depth,
            min_confidence,
        } => {
            let label_map = load_labels(labels.as_deref())?;
            let set = parse_annotation_csv(&read_text(&annotations)?, &label_map)?;
            let detections = detect(&frame, &set, min_confidence);
            let reports: Vec<ObjectReport> = match depth {
                Some(path) => {
                    let depth = sightline_core::media::decode_depthmap(&read_bytes(&path)?)?;
                    report_objects(&detections, &depth)
                }
                None => detections
                    .iter()
                    .map(|d| ObjectReport {
                        label: d.label.clone(),
                        distance_m: None,
                        bbox: d.bbox,
                    })
                    .collect(),
            };
            for r in &reports {
                let distance = match r.distance_m {
                    Some(m) => format!("{m:.3}"),
                    None => "unknown".to_string(),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.label, distance, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h
                )?;
            }
            Ok(0)
        }
        Command::Route { graph, from, to } => {
            let graph = parse_route_graph(&read_text(&graph)?)?;
            let dst = geocode(&graph, &to)?;
            let path = shortest_path(&graph, from, dst)?;
            for step in generate_instructions(&graph, &path.nodes) {
                writeln!(out, "{} ({:.1} m)", step.text, step.distance_m)?;
            }
            Ok(0)
        }
        Command::Guide { text, objects } => {
            let reports = objects
                .iter()
                .map(|spec| parse_object_spec(spec))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let step = RouteStep {
                text,
                distance_m: 0.0,
                bearing: 0.0,
            };
            let message = compose_guidance(&step, &reports);
            writeln!(out, "SPEAK[rate={}]: {}", message.speaking_rate, message.text)?;
            Ok(0)
        }
        Command::Serve {
            bind,
            batches,
            interval_ms,
        } => {
            let feed = parse_batch_feed(&read_text(&batches)?)?;
            writeln!(out, "serving {} batches on {bind}", feed.len())?;
            out.flush()?;
            let (tx, rx) = mpsc::channel();
            let feeder = thread::spawn(move || {
                for batch in feed {
                    if tx.send(batch).is_err() {
                        return;
                    }
                    thread::sleep(Duration::from_millis(interval_ms));
                }
                // tx drops here; the server finishes its queue and exits.
            });
            serve(&bind, rx)?;
            let _ = feeder.join();
            Ok(0)
        }
        Command::Client { action } => run_client(action, out),
        Command::Simulate { args } => {
            let cfg = SimulationConfig::load(&args.config)?;
            let outcome = run_simulation(&cfg, out)?;
            if let Some(path) = &args.timing_csv {
                fs::write(path, outcome.timing.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(if outcome.destination_ok { 0 } else { 1 })
        }
    }
}

fn run_client(action: ClientAction, out: &mut dyn Write) -> anyhow::Result<i32> {
    match action {
        ClientAction::SpeakInput => {
            let stdin = std::io::stdin();
            for line in stdin.lock().lines() {
                writeln!(out, "SPEAK[rate={DEFAULT_SPEAKING_RATE}]: {}", line?)?;
            }
            Ok(0)
        }
        ClientAction::GiveInput => {
            let mut line = String::new();
            std::io::stdin().read_line(&mut line)?;
            writeln!(out, "heard: {}", line.trim())?;
            Ok(0)
        }
        ClientAction::Navigate { connect } => {
            let labels = LabelMap::default();
            receive(&connect, |frame| {
                let _ = print_frame(out, &labels, &frame);
                let _ = out.flush();
            })?;
            Ok(0)
        }
    }
}

fn print_frame(
    out: &mut dyn Write,
    labels: &LabelMap,
    frame: &sightline_core::wire::WireFrame,
) -> std::io::Result<()> {
    match frame.kind {
        FrameKind::Heartbeat => Ok(()),
        FrameKind::Beep => writeln!(out, "BEEP"),
        FrameKind::ObjectReportBatch => {
            let Ok(batch) = ReportBatchPayload::decode(&frame.payload) else {
                return writeln!(out, "BEEP");
            };
            for obj in &batch.objects {
                let label = labels
                    .label_of(obj.label_id)
                    .map_or_else(|| format!("label {}", obj.label_id), str::to_string);
                let distance = match obj.distance_m() {
                    Some(m) => format!("at {m:.2} m"),
                    None => "at unknown distance".to_string(),
                };
                writeln!(
                    out,
                    "frame {}: {} {} [x={} y={} w={} h={}]",
                    batch.frame_id, label, distance, obj.x, obj.y, obj.w, obj.h
                )?;
            }
            Ok(())
        }
    }
}

/// `label` or `label:distance_m`, e.g. `person:3.2`.
fn parse_object_spec(spec: &str) -> anyhow::Result<ObjectReport> {
    let (label, distance_m) = match spec.rsplit_once(':') {
        Some((label, dist)) => {
            let d: f64 = dist
                .parse()
                .with_context(|| format!("bad distance in object spec {spec:?}"))?;
            (label, Some(d))
        }
        None => (spec, None),
    };
    if label.is_empty() {
        bail!("object spec {spec:?} has an empty label");
    }
    Ok(ObjectReport {
        label: label.to_string(),
        distance_m,
        bbox: BBox {
            x: 0,
            y: 0,
            w: 1,
            h: 1,
        },
    })
}

/// Parses the serve feed: one object per row, consecutive rows sharing a
/// frame_id grouped into a batch. `unknown` is accepted for distance_mm.
fn parse_batch_feed(text: &str) -> anyhow::Result<Vec<ReportBatchPayload>> {
    let mut batches: Vec<ReportBatchPayload> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        let [frame_id, label_id, distance_mm, x, y, w, h] = fields[..] else {
            bail!("feed line {}: expected 7 fields, got {}", idx + 1, fields.len());
        };
        let frame_id: u32 = frame_id.parse().context("frame_id")?;
        let object = WireObject {
            label_id: label_id.parse().context("label_id")?,
            distance_mm: if distance_mm == "unknown" {
                UNKNOWN_DISTANCE_MM
            } else {
                distance_mm.parse().context("distance_mm")?
            },
            x: x.parse().context("x")?,
            y: y.parse().context("y")?,
            w: w.parse().context("w")?,
            h: h.parse().context("h")?,
        };
        match batches.last_mut() {
            Some(b) if b.frame_id == frame_id => b.objects.push(object),
            _ => batches.push(ReportBatchPayload {
                frame_id,
                objects: vec![object],
            }),
        }
    }
    Ok(batches)
}

fn load_labels(path: Option<&Path>) -> anyhow::Result<LabelMap> {
    match path {
        Some(p) => Ok(load_label_map(&read_text(p)?)?),
        None => Ok(LabelMap::default()),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bytes(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &mut dyn Write, dest: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match dest {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_feed_groups_consecutive_frames() {
        let feed = parse_batch_feed(
            "# a comment\n\
             3,1,2500,10,20,30,40\n\
             3,62,unknown,1,2,3,4\n\
             7,1,1000,5,6,7,8\n\
             3,1,4000,9,9,9,9\n",
        )
        .unwrap();
        assert_eq!(feed.len(), 3, "frame 3 reappearing later starts a new batch");
        assert_eq!(feed[0].frame_id, 3);
        assert_eq!(feed[0].objects.len(), 2);
        assert_eq!(feed[0].objects[1].distance_mm, UNKNOWN_DISTANCE_MM);
        assert_eq!(feed[1].frame_id, 7);
        assert_eq!(feed[2].frame_id, 3);
    }

    #[test]
    fn batch_feed_rejects_short_rows() {
        let err = parse_batch_feed("1,2,3\n").unwrap_err();
        assert!(err.to_string().contains("expected 7 fields"), "{err}");
    }

    #[test]
    fn object_specs_parse_label_and_distance() {
        let with = parse_object_spec("person:3.25").unwrap();
        assert_eq!(with.label, "person");
        assert_eq!(with.distance_m, Some(3.25));

        let without = parse_object_spec("traffic light").unwrap();
        assert_eq!(without.label, "traffic light");
        assert_eq!(without.distance_m, None);

        assert!(parse_object_spec("person:nearby").is_err());
        assert!(parse_object_spec(":3.0").is_err());
    }
}
