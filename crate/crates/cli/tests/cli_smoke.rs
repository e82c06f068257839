//! One pass over every subcommand through the real binary: each stage gets a
//! tiny generated input, runs, and hands its output to the next stage where
//! that makes sense (calibrate -> depth, disparity -> depth -> detect).

use std::io::Write as _;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightline_core::calib::{
    format_rig_report, generate_synthetic_stereo_observations, synthetic_pose_sweep,
    CameraIntrinsics, StereoCalibration, StereoRig,
};
use sightline_core::media::{encode_pgm, format_corner_csv, BoardModel, GrayImage};

const BIN: &str = env!("CARGO_BIN_EXE_sightline");

fn run_ok(args: &[&str]) -> String {
    let output = Command::new(BIN).args(args).output().unwrap();
    assert!(
        output.status.success(),
        "sightline {} failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn write_stereo_pair(dir: &Path, shift: u32) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (w, h) = (96u32, 64u32);
    let tex: Vec<u8> = (0..(w + shift) as usize * h as usize)
        .map(|_| rng.random())
        .collect();
    let at = |x: u32, y: u32| tex[y as usize * (w + shift) as usize + x as usize];
    let left = GrayImage::from_fn(w, h, |x, y| at(x, y));
    let right = GrayImage::from_fn(w, h, |x, y| at(x + shift, y));
    let lp = dir.join("left.pgm");
    let rp = dir.join("right.pgm");
    std::fs::write(&lp, encode_pgm(&left)).unwrap();
    std::fs::write(&rp, encode_pgm(&right)).unwrap();
    (lp.to_str().unwrap().into(), rp.to_str().unwrap().into())
}

fn rig_report_text() -> String {
    let rig = StereoRig {
        left: CameraIntrinsics::new(600.0, 600.0, 48.0, 32.0, 0.003).unwrap(),
        right: CameraIntrinsics::new(600.0, 600.0, 48.0, 32.0, 0.003).unwrap(),
        relative_rotation: Vector3::zeros(),
        baseline_vector: Vector3::new(0.07, 0.0, 0.0),
    };
    format_rig_report(&StereoCalibration {
        rig,
        view_ids: Vec::new(),
        left_poses: Vec::new(),
        rms_px: 0.4,
        cost_history: Vec::new(),
    })
}

#[test]
fn calibration_commands_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    let board = BoardModel::new(9, 6, 0.025).unwrap();
    let left = CameraIntrinsics::new(660.0, 660.0, 320.0, 240.0, 0.003).unwrap();
    let right = CameraIntrinsics::new(665.0, 662.0, 318.0, 242.0, 0.003).unwrap();
    let rig = StereoRig {
        left,
        right,
        relative_rotation: Vector3::new(0.0, 0.017, 0.0),
        baseline_vector: Vector3::new(0.06, 0.0, 0.0),
    };
    let poses = synthetic_pose_sweep(&board, 10);
    let obs = generate_synthetic_stereo_observations(&rig, &poses, &board, 0.2, 9).unwrap();
    let corners = dir.path().join("corners.csv");
    std::fs::write(&corners, format_corner_csv(&obs)).unwrap();

    let mono = run_ok(&["calibrate", "--corners", corners.to_str().unwrap()]);
    assert!(mono.contains("param,fx,"), "mono report missing fx: {mono}");
    assert!(mono.contains("rms_px,"), "mono report missing rms: {mono}");

    let report_path = dir.path().join("rig.txt");
    let stereo = run_ok(&[
        "stereo-calibrate",
        "--corners",
        corners.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(stereo.contains("wrote "), "expected write confirmation: {stereo}");
    let written = std::fs::read_to_string(&report_path).unwrap();
    assert!(written.contains("param,baseline.x,"), "rig report: {written}");
}

#[test]
fn disparity_depth_detect_chain() {
    let dir = tempfile::tempdir().unwrap();
    let (left, right) = write_stereo_pair(dir.path(), 12);
    let disp_path = dir.path().join("out.disp");
    let summary = run_ok(&[
        "disparity",
        "--left",
        &left,
        "--right",
        &right,
        "--out",
        disp_path.to_str().unwrap(),
    ]);
    assert!(summary.starts_with("disparity 96x64:"), "summary: {summary}");

    let rig_path = dir.path().join("rig.txt");
    std::fs::write(&rig_path, rig_report_text()).unwrap();
    let depth_path = dir.path().join("out.depth");
    let summary = run_ok(&[
        "depth",
        "--disparity",
        disp_path.to_str().unwrap(),
        "--calibration",
        rig_path.to_str().unwrap(),
        "--out",
        depth_path.to_str().unwrap(),
    ]);
    assert!(summary.starts_with("depth 96x64:"), "summary: {summary}");

    let ann_path = dir.path().join("ann.csv");
    std::fs::write(&ann_path, "0,person,20,10,30,30,0.9\n0,chair,60,20,20,20,0.8\n").unwrap();
    let rows = run_ok(&[
        "detect",
        "--annotations",
        ann_path.to_str().unwrap(),
        "--frame",
        "0",
        "--depth",
        depth_path.to_str().unwrap(),
    ]);
    // Disparity 12 against a 42 m*px depth factor puts both boxes at 3.5 m.
    assert_eq!(
        rows.lines().collect::<Vec<_>>(),
        ["person,3.500,20,10,30,30", "chair,3.500,60,20,20,20"],
        "detect rows"
    );

    // Without depth the same detections come back unranged.
    let rows = run_ok(&[
        "detect",
        "--annotations",
        ann_path.to_str().unwrap(),
        "--frame",
        "0",
    ]);
    assert!(rows.lines().all(|l| l.contains(",unknown,")), "rows: {rows}");
}

#[test]
fn route_and_guide_commands() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.txt");
    std::fs::write(
        &graph,
        "node,1,Gate,37.4200,-122.1700\n\
         node,2,-,37.4210,-122.1700\n\
         node,3,Library,37.4210,-122.1687\n\
         edge,1,2,Campus Walk\n\
         edge,2,3,East Lane\n",
    )
    .unwrap();
    let steps = run_ok(&[
        "route",
        "--graph",
        graph.to_str().unwrap(),
        "--from",
        "1",
        "--to",
        "library",
    ]);
    let lines: Vec<&str> = steps.lines().collect();
    assert_eq!(lines.len(), 3, "route steps: {steps}");
    assert!(lines[0].starts_with("Head north on Campus Walk ("), "{steps}");
    assert!(lines[1].starts_with("Turn right onto East Lane ("), "{steps}");
    assert!(lines[2].starts_with("You have arrived at Library ("), "{steps}");

    let spoken = run_ok(&[
        "guide",
        "--text",
        "Head north on Campus Walk",
        "--object",
        "person:0.9144",
        "--object",
        "bicycle",
    ]);
    assert_eq!(
        spoken,
        "SPEAK[rate=0.8]: Head north on Campus Walk but beware there is person \
         is at 3 feet and but beware there is bicycle is at unknown distance\n"
    );
}

#[test]
fn serve_feeds_navigate_client() {
    let dir = tempfile::tempdir().unwrap();
    let feed = dir.path().join("batches.csv");
    // Labels 1 and 62 are person and chair in the built-in map.
    std::fs::write(&feed, "0,1,2500,10,20,30,40\n0,62,unknown,50,60,70,80\n1,1,1000,5,6,7,8\n")
        .unwrap();

    // Pick a free port, then let the server rebind it. The listener must be
    // dropped first, so there is a small startup race; the client retries.
    let port = {
        let probe = TcpListener::bind("127.0.0.1:0").unwrap();
        probe.local_addr().unwrap().port()
    };
    let bind = format!("127.0.0.1:{port}");
    let mut server = Command::new(BIN)
        .args(["serve", "--bind", &bind, "--batches", feed.to_str().unwrap(), "--interval-ms", "50"])
        .stdout(Stdio::null())
        .spawn()
        .unwrap();

    let mut navigate = None;
    for _ in 0..50 {
        let out = Command::new(BIN)
            .args(["client", "navigate", "--connect", &bind])
            .output()
            .unwrap();
        if out.status.success() {
            navigate = Some(String::from_utf8(out.stdout).unwrap());
            break;
        }
        thread::sleep(Duration::from_millis(100));
    }
    let _ = server.wait();
    let stdout = navigate.expect("client never connected to the serve process");
    assert!(
        stdout.contains("frame 0: person at 2.50 m [x=10 y=20 w=30 h=40]"),
        "navigate output:\n{stdout}"
    );
    assert!(
        stdout.contains("frame 0: chair at unknown distance [x=50 y=60 w=70 h=80]"),
        "navigate output:\n{stdout}"
    );
    assert!(
        stdout.contains("frame 1: person at 1.00 m [x=5 y=6 w=7 h=8]"),
        "navigate output:\n{stdout}"
    );
}

#[test]
fn input_helpers_echo_lines() {
    let mut child = Command::new(BIN)
        .args(["client", "speak-input"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"turn left\nstop\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "SPEAK[rate=0.8]: turn left\nSPEAK[rate=0.8]: stop\n"
    );

    let mut child = Command::new(BIN)
        .args(["client", "give-input"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"  Library  \n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "heard: Library\n");
}

#[test]
fn simulate_writes_timing_csv() {
    // Reuses the acceptance fixture layout in miniature: one frame, straight
    // two-node route.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("rig.txt"), rig_report_text()).unwrap();
    let (_l, _r) = write_stereo_pair(root, 14);
    std::fs::write(root.join("ann.csv"), "0,person,20,10,30,30,0.9\n").unwrap();
    std::fs::write(
        root.join("graph.txt"),
        "node,1,Gate,37.4200,-122.1700\n\
         node,2,Library,37.4210,-122.1700\n\
         edge,1,2,Campus Walk\n",
    )
    .unwrap();
    std::fs::write(
        root.join("sim.cfg"),
        "calibration,rig.txt\n\
         frame,left.pgm,right.pgm\n\
         annotations,ann.csv\n\
         graph,graph.txt\n\
         source,1\n\
         destination,Library\n",
    )
    .unwrap();

    let csv = root.join("timing.csv");
    let stdout = run_ok(&[
        "simulate",
        "--config",
        root.join("sim.cfg").to_str().unwrap(),
        "--timing-csv",
        csv.to_str().unwrap(),
    ]);
    assert!(
        stdout.contains("SPEAK[rate=0.8]: Head north on Campus Walk but beware there is person is at 10 feet"),
        "transcript:\n{stdout}"
    );

    let csv = std::fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("task,seconds"));
    let tasks: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        tasks,
        ["setup", "disparity+depth", "image load", "detection", "Cumulative time"]
    );
}
