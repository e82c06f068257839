//! Acceptance gate for the whole pipeline. Each test covers one release
//! criterion end to end and prints a `ACCEPTANCE <n> (<name>): PASS` line,
//! so `cargo test --test acceptance -- --nocapture` reads as a checklist.
//!
//! Fixtures are generated in temp directories from seeded RNGs; nothing
//! binary is checked in.

use std::io::Cursor;
use std::io::Write as _;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightline_core::calib::{
    calibrate_mono, format_rig_report, generate_synthetic_observations, synthetic_pose_sweep,
    CameraIntrinsics, StereoCalibration, StereoRig,
};
use sightline_core::guide::compose_guidance;
use sightline_core::media::{encode_pgm, BoardModel, CameraId, GrayImage};
use sightline_core::route::{parse_route_graph, shortest_path, RouteError, RouteGraph, RouteStep};
use sightline_core::stereo::{
    compute_disparity, depth_map, object_distance, BBox, MatchParams,
};
use sightline_core::wire::{
    decode_frame, encode_frame, receive_stream, Decoded, ReportBatchPayload, WireFrame,
    WireObject, UNKNOWN_DISTANCE_MM,
};
use sightline_core::detect::ObjectReport;
use nalgebra::Vector3;

const BIN: &str = env!("CARGO_BIN_EXE_sightline");

fn pass(n: u32, name: &str) {
    println!("ACCEPTANCE {n} ({name}): PASS");
}

// A reproducible random texture with enough local contrast for block
// matching. `width` may exceed the image width so a shifted window of the
// same texture can play the role of the other camera.
fn texture(seed: u64, width: u32, height: u32) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..width as usize * height as usize)
        .map(|_| rng.random::<u8>())
        .collect()
}

/// Left/right views of a fronto-parallel scene at uniform disparity `shift`:
/// the right camera sees the same texture translated left by `shift` pixels.
fn shifted_pair(seed: u64, width: u32, height: u32, shift: u32) -> (GrayImage, GrayImage) {
    let tex_w = width + shift;
    let tex = texture(seed, tex_w, height);
    let at = |x: u32, y: u32| tex[y as usize * tex_w as usize + x as usize];
    let left = GrayImage::from_fn(width, height, |x, y| at(x, y));
    let right = GrayImage::from_fn(width, height, |x, y| at(x + shift, y));
    (left, right)
}

fn board() -> BoardModel {
    BoardModel::new(9, 6, 0.025).unwrap()
}

fn truth_intrinsics() -> CameraIntrinsics {
    // 2.0 mm lens on a 3 um pixel pitch sensor.
    CameraIntrinsics::new(2.0 / 0.003, 2.0 / 0.003, 320.0, 240.0, 0.003).unwrap()
}

#[test]
fn criterion_1_focal_length_recovery_under_noise() {
    let start = Instant::now();
    let intr = truth_intrinsics();
    let poses = synthetic_pose_sweep(&board(), 12);
    let obs = generate_synthetic_observations(&intr, &poses, &board(), 0.5, 71).unwrap();
    let report = calibrate_mono(&obs, CameraId::Left, 0.003, (640, 480)).unwrap();

    let focal_mm = report.intrinsics.focal_mm();
    let rel = (focal_mm - 2.0).abs() / 2.0;
    assert!(
        rel <= 0.034,
        "focal length {focal_mm:.5} mm off truth 2.0 mm by {:.2}%",
        rel * 100.0
    );
    assert!(
        start.elapsed() < Duration::from_secs(10),
        "calibration took {:?}",
        start.elapsed()
    );
    pass(1, "focal length recovery under noise");
}

#[test]
fn criterion_2_ranging_accuracy_at_reference_distances() {
    let start = Instant::now();
    // Distances of 5, 8, 10, 12 and 15 feet in meters. With fx = 600 px and a
    // 60.96 mm baseline the disparities come out as exact integers.
    let distances_m = [1.524, 2.4384, 3.048, 3.6576, 4.572];
    let disparities = [24u32, 15, 12, 10, 8];
    let rig = StereoRig {
        left: CameraIntrinsics::new(600.0, 600.0, 80.0, 48.0, 0.003).unwrap(),
        right: CameraIntrinsics::new(600.0, 600.0, 80.0, 48.0, 0.003).unwrap(),
        relative_rotation: Vector3::zeros(),
        baseline_vector: Vector3::new(0.06096, 0.0, 0.0),
    };
    let bbox = BBox {
        x: 40,
        y: 20,
        w: 60,
        h: 40,
    };

    for (i, (&truth, &d)) in distances_m.iter().zip(&disparities).enumerate() {
        let (left, right) = shifted_pair(100 + i as u64, 160, 96, d);
        let disp = compute_disparity(&left, &right, &MatchParams::default()).unwrap();
        let depth = depth_map(&disp, &rig);
        let measured = object_distance(&depth, &bbox).unwrap();
        let err = (measured - truth).abs();
        assert!(
            err <= 0.61,
            "distance {measured:.3} m vs truth {truth:.3} m: error {err:.3} m exceeds 0.61 m"
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(30),
        "ranging run took {:?}",
        start.elapsed()
    );
    pass(2, "ranging accuracy at reference distances");
}

#[test]
fn criterion_3_disparity_estimation_on_shifted_and_identical_pairs() {
    let (left, right) = shifted_pair(3, 320, 240, 7);
    let disp = compute_disparity(&left, &right, &MatchParams::default()).unwrap();
    let mut valid = 0usize;
    let mut near = 0usize;
    for y in 0..disp.height() {
        for x in 0..disp.width() {
            if let Some(d) = disp.value(x, y) {
                valid += 1;
                if (f64::from(d) - 7.0).abs() <= 1.0 {
                    near += 1;
                }
            }
        }
    }
    assert!(valid > 0, "no valid disparities at all");
    let frac = near as f64 / valid as f64;
    assert!(
        frac >= 0.95,
        "only {:.1}% of {valid} valid disparities within 1 px of the 7 px shift",
        frac * 100.0
    );

    let same = compute_disparity(&left, &left, &MatchParams::default()).unwrap();
    let mut zero_valid = 0usize;
    for y in 0..same.height() {
        for x in 0..same.width() {
            if let Some(d) = same.value(x, y) {
                zero_valid += 1;
                assert_eq!(d, 0.0, "identical pair produced nonzero disparity at ({x},{y})");
            }
        }
    }
    assert!(zero_valid > 0, "identical pair produced no valid disparities");
    pass(3, "disparity estimation on shifted and identical pairs");
}

#[test]
fn criterion_4_noise_free_calibration_converges() {
    let intr = truth_intrinsics();
    let poses = synthetic_pose_sweep(&board(), 12);
    let obs = generate_synthetic_observations(&intr, &poses, &board(), 0.0, 4).unwrap();
    let report = calibrate_mono(&obs, CameraId::Left, 0.003, (640, 480)).unwrap();

    assert!(
        report.rms_px < 1e-6,
        "noise-free rms {} px not at numerical zero",
        report.rms_px
    );
    for (name, got, want) in [
        ("fx", report.intrinsics.fx, intr.fx),
        ("fy", report.intrinsics.fy, intr.fy),
        ("cx", report.intrinsics.cx, intr.cx),
        ("cy", report.intrinsics.cy, intr.cy),
    ] {
        let rel = (got - want).abs() / want.abs();
        assert!(rel <= 1e-4, "{name} {got} vs {want}: rel err {rel:.2e}");
    }
    for pair in report.cost_history.windows(2) {
        assert!(
            pair[1] <= pair[0] * (1.0 + 1e-12),
            "cost went up: {} -> {}",
            pair[0],
            pair[1]
        );
    }
    pass(4, "noise-free calibration converges");
}

// Criterion 5 helpers: a seeded random graph expressed in the text format,
// and an exhaustive path search to check the router against.

fn random_graph_text(rng: &mut StdRng) -> (String, Vec<u64>) {
    let n = rng.random_range(2..=8usize);
    let mut ids: Vec<u64> = Vec::new();
    while ids.len() < n {
        let id = rng.random_range(1..=500u64) * 7;
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let names = ["Library", "Gate A", "Fountain", "Dorm 3", "Cafe"];
    let ways = ["Campus Walk", "East Lane", "-", "Low Road"];
    let mut lines = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let name = if rng.random_bool(0.4) {
            names[i % names.len()]
        } else {
            "-"
        };
        let lat = 37.42 + (rng.random::<f64>() - 0.5) * 0.01;
        let lon = -122.17 + (rng.random::<f64>() - 0.5) * 0.01;
        lines.push(format!("node,{id},{name},{lat},{lon}"));
    }
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if rng.random_bool(0.45) {
                let way = ways[rng.random_range(0..ways.len())];
                lines.push(format!("edge,{},{},{way}", ids[i], ids[j]));
            }
        }
    }
    // Parse order must not matter; shuffle the lines.
    for i in (1..lines.len()).rev() {
        lines.swap(i, rng.random_range(0..=i));
    }
    (lines.join("\n"), ids)
}

fn brute_force_cost(graph: &RouteGraph, src: u64, dst: u64) -> Option<f64> {
    fn dfs(
        graph: &RouteGraph,
        cur: u64,
        dst: u64,
        visited: &mut Vec<u64>,
        cost: f64,
        best: &mut Option<f64>,
    ) {
        if cur == dst {
            if best.is_none_or(|b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for e in graph.edges() {
            let next = if e.a == cur {
                e.b
            } else if e.b == cur {
                e.a
            } else {
                continue;
            };
            if visited.contains(&next) {
                continue;
            }
            visited.push(next);
            dfs(graph, next, dst, visited, cost + e.length_m, best);
            visited.pop();
        }
    }
    let mut best = None;
    dfs(graph, src, dst, &mut vec![src], 0.0, &mut best);
    best
}

#[test]
fn criterion_5_router_matches_exhaustive_search() {
    let mut rng = StdRng::seed_from_u64(0xACCE);
    let mut routed = 0;
    let mut unreachable = 0;
    for round in 0..100 {
        let (text, ids) = random_graph_text(&mut rng);
        let graph = parse_route_graph(&text).unwrap();
        let src = ids[rng.random_range(0..ids.len())];
        let dst = ids[rng.random_range(0..ids.len())];
        let want = brute_force_cost(&graph, src, dst);
        match shortest_path(&graph, src, dst) {
            Ok(path) => {
                let want = want.unwrap_or_else(|| {
                    panic!("round {round}: router found a path the exhaustive search missed")
                });
                assert_eq!(path.total_m, want, "round {round}: cost mismatch");
                assert_eq!(path.nodes.first(), Some(&src), "round {round}");
                assert_eq!(path.nodes.last(), Some(&dst), "round {round}");
                routed += 1;
            }
            Err(RouteError::NoRoute { .. }) => {
                assert!(want.is_none(), "round {round}: exhaustive search found a path");
                unreachable += 1;
            }
            Err(other) => panic!("round {round}: unexpected error {other}"),
        }
    }
    assert!(routed >= 30, "only {routed} routed cases; generator too sparse");
    assert!(unreachable >= 5, "only {unreachable} unreachable cases");
    pass(5, "router matches exhaustive search");
}

fn random_valid_frame(rng: &mut StdRng) -> WireFrame {
    match rng.random_range(0..3u8) {
        0 => WireFrame::heartbeat(),
        1 => WireFrame::beep(),
        _ => {
            let objects = (0..rng.random_range(0..=5usize))
                .map(|_| WireObject {
                    label_id: rng.random(),
                    distance_mm: if rng.random_bool(0.2) {
                        UNKNOWN_DISTANCE_MM
                    } else {
                        rng.random_range(0..100_000)
                    },
                    x: rng.random(),
                    y: rng.random(),
                    w: rng.random(),
                    h: rng.random(),
                })
                .collect();
            WireFrame::batch(&ReportBatchPayload {
                frame_id: rng.random(),
                objects,
            })
        }
    }
}

#[test]
fn criterion_6_wire_codec_roundtrip_and_fuzz() {
    let mut rng = StdRng::seed_from_u64(0xF00D);

    for i in 0..1000 {
        let frame = random_valid_frame(&mut rng);
        let bytes = encode_frame(&frame).unwrap();
        match decode_frame(&bytes).unwrap() {
            Decoded::Frame { frame: got, consumed } => {
                assert_eq!(got, frame, "roundtrip {i} changed the frame");
                assert_eq!(consumed, bytes.len(), "roundtrip {i} left bytes over");
            }
            Decoded::NeedMoreBytes => panic!("roundtrip {i}: full frame not decoded"),
        }
    }

    // A healthy stream to mutate: three frames back to back.
    let mut base = Vec::new();
    for _ in 0..3 {
        base.extend(encode_frame(&random_valid_frame(&mut rng)).unwrap());
    }
    for _ in 0..10_000 {
        let mut bytes = base.clone();
        for _ in 0..rng.random_range(1..=4usize) {
            match rng.random_range(0..3u8) {
                0 => {
                    let i = rng.random_range(0..bytes.len());
                    bytes[i] ^= 1 << rng.random_range(0..8u8);
                }
                1 => bytes.truncate(rng.random_range(0..=bytes.len())),
                _ => {
                    let i = rng.random_range(0..=bytes.len());
                    bytes.insert(i, rng.random());
                }
            }
            if bytes.is_empty() {
                break;
            }
        }
        // Must come back with a typed outcome, not a panic or a hang.
        let _ = receive_stream(Cursor::new(bytes), |_| {});
    }
    pass(6, "wire codec roundtrip and fuzz");
}

#[test]
fn criterion_7_guidance_template_is_byte_exact() {
    let step = RouteStep {
        text: "Head north on Main Way".to_string(),
        distance_m: 12.0,
        bearing: 0.0,
    };
    let object = |label: &str, distance_m: Option<f64>| ObjectReport {
        label: label.to_string(),
        distance_m,
        bbox: BBox { x: 0, y: 0, w: 1, h: 1 },
    };

    let plain = compose_guidance(&step, &[]);
    assert_eq!(plain.text, "Head north on Main Way");
    assert_eq!(plain.speaking_rate, 0.8);

    let one = compose_guidance(&step, &[object("person", Some(0.9144))]);
    assert_eq!(
        one.text,
        "Head north on Main Way but beware there is person is at 3 feet"
    );

    let two = compose_guidance(
        &step,
        &[object("chair", Some(1.524)), object("backpack", None)],
    );
    assert_eq!(
        two.text,
        "Head north on Main Way but beware there is chair is at 5 feet \
         and but beware there is backpack is at unknown distance"
    );
    pass(7, "guidance template is byte exact");
}

// Criteria 8 and 9 drive the built binary over a generated walk: three
// stereo frames at 6, 3.5 and 3 meters from the obstacle, four route nodes
// with two turns.

struct SimFixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    config: PathBuf,
}

fn write_sim_fixture(destination: &str) -> SimFixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // fx = 600 px, 70 mm baseline: depth = 42 / disparity meters.
    let rig = StereoRig {
        left: CameraIntrinsics::new(600.0, 600.0, 48.0, 32.0, 0.003).unwrap(),
        right: CameraIntrinsics::new(600.0, 600.0, 48.0, 32.0, 0.003).unwrap(),
        relative_rotation: Vector3::zeros(),
        baseline_vector: Vector3::new(0.07, 0.0, 0.0),
    };
    let calib = StereoCalibration {
        rig,
        view_ids: Vec::new(),
        left_poses: Vec::new(),
        rms_px: 0.42,
        cost_history: Vec::new(),
    };
    std::fs::write(root.join("rig.txt"), format_rig_report(&calib)).unwrap();

    // Disparities 7, 12, 14 -> 6.0, 3.5, 3.0 m -> 20, 11, 10 feet.
    for (i, shift) in [7u32, 12, 14].into_iter().enumerate() {
        let (left, right) = shifted_pair(800 + i as u64, 96, 64, shift);
        std::fs::write(root.join(format!("f{i}_left.pgm")), encode_pgm(&left)).unwrap();
        std::fs::write(root.join(format!("f{i}_right.pgm")), encode_pgm(&right)).unwrap();
    }

    std::fs::write(
        root.join("annotations.csv"),
        "0,person,20,10,30,30,0.9\n1,chair,20,10,30,30,0.9\n2,car,20,10,30,30,0.9\n",
    )
    .unwrap();

    std::fs::write(
        root.join("graph.txt"),
        "node,10,Gate,37.4200,-122.1700\n\
         node,11,-,37.4210,-122.1700\n\
         node,12,-,37.4210,-122.1687\n\
         node,13,Library,37.4221,-122.1687\n\
         edge,10,11,Campus Walk\n\
         edge,11,12,East Lane\n\
         edge,12,13,Library Path\n",
    )
    .unwrap();

    let config = root.join("sim.cfg");
    std::fs::write(
        &config,
        format!(
            "calibration,rig.txt\n\
             frame,f0_left.pgm,f0_right.pgm\n\
             frame,f1_left.pgm,f1_right.pgm\n\
             frame,f2_left.pgm,f2_right.pgm\n\
             annotations,annotations.csv\n\
             graph,graph.txt\n\
             source,10\n\
             destination,{destination}\n"
        ),
    )
    .unwrap();
    SimFixture { dir, config }
}

fn split_transcript(stdout: &str) -> (Vec<String>, Vec<(String, f64)>) {
    let mut spoken = Vec::new();
    let mut timing = Vec::new();
    for line in stdout.lines() {
        if let Some(rest) = line.strip_prefix("timing,") {
            let (task, secs) = rest.rsplit_once(',').expect("timing row shape");
            timing.push((task.to_string(), secs.parse::<f64>().expect("timing seconds")));
        } else {
            spoken.push(line.to_string());
        }
    }
    (spoken, timing)
}

#[test]
fn criterion_8_simulated_walk_matches_golden_transcript() {
    let start = Instant::now();
    let fixture = write_sim_fixture("Library");
    let output = Command::new(BIN)
        .args(["simulate", "--config"])
        .arg(&fixture.config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "simulate failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let stdout = String::from_utf8(output.stdout).unwrap();
    let (spoken, timing) = split_transcript(&stdout);
    assert_eq!(
        spoken,
        [
            "SPEAK[rate=0.8]: Head north on Campus Walk but beware there is person is at 20 feet",
            "SPEAK[rate=0.8]: Head Turn right onto East Lane but beware there is chair is at 11 feet",
            "SPEAK[rate=0.8]: Head Turn left onto Library Path but beware there is car is at 10 feet",
        ],
        "spoken transcript diverged"
    );

    let tasks: Vec<&str> = timing.iter().map(|(t, _)| t.as_str()).collect();
    assert_eq!(
        tasks,
        ["setup", "disparity+depth", "image load", "detection", "Cumulative time"],
        "timing table rows"
    );
    let total = timing.last().unwrap().1;
    for (task, secs) in &timing {
        assert!(*secs >= 0.0, "{task} reported negative time");
        assert!(
            *secs <= total,
            "{task} average {secs} exceeds cumulative {total}"
        );
    }
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "simulation took {:?}",
        start.elapsed()
    );
    pass(8, "simulated walk matches golden transcript");
}

#[test]
fn criterion_9_failures_degrade_to_beeps() {
    // Unknown destination: one beep, nothing spoken, nonzero exit.
    let fixture = write_sim_fixture("Atlantis");
    let output = Command::new(BIN)
        .args(["simulate", "--config"])
        .arg(&fixture.config)
        .output()
        .unwrap();
    assert!(
        !output.status.success(),
        "simulate should exit nonzero when the destination is unknown"
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    let (spoken, timing) = split_transcript(&stdout);
    assert_eq!(spoken, ["BEEP"], "expected exactly one beep line");
    assert_eq!(timing.len(), 5, "timing footer still expected after a beep");

    // Server dying mid-frame: the client should surface the beep and stop.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let batch = WireFrame::batch(&ReportBatchPayload {
            frame_id: 0,
            objects: vec![WireObject {
                label_id: 1,
                distance_mm: 2500,
                x: 10,
                y: 20,
                w: 30,
                h: 40,
            }],
        });
        let mut bytes = encode_frame(&batch).unwrap();
        let half: Vec<u8> = encode_frame(&WireFrame::heartbeat()).unwrap()[..5].to_vec();
        bytes.extend(half);
        stream.write_all(&bytes).unwrap();
        stream.flush().unwrap();
        // Give the client a moment to drain before the socket drops.
        thread::sleep(Duration::from_millis(300));
    });
    let output = Command::new(BIN)
        .args(["client", "navigate", "--connect", &addr.to_string()])
        .output()
        .unwrap();
    server.join().unwrap();
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(
        stdout.lines().any(|l| l == "BEEP"),
        "client did not surface the dropped link as a beep; stdout:\n{stdout}"
    );
    pass(9, "failures degrade to beeps");
}
