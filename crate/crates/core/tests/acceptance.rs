//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion also has a wall-clock budget.

mod common;

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenegen::cli::{cmd_pipeline, PipelineOverrides, VARIANTS_DIR};
use scenegen::geometry::{distance_lp, CurveMetricParams, Point2, Spline2D};
use scenegen::imaging::{centerline, contour_to_spline, save_pgm, trace_contour, BinaryMask};
use scenegen::perturb::{generate_variants, write_batch, ParamGrid, Range, SamplingRanges, VariantOptions, D1};
use scenegen::protocol::{
    decode, send_scene, send_scene_filtered, SceneDump, SceneMessage, SceneServer, SendOptions, Transport,
};
use scenegen::stl::{monitor, monitor_bool, monitor_robust, parse_stl, StlFormula, Trace};
use scenegen::tiles::{
    code_neighborhood, rasterize, rasterize_with_transform, synthesize, RasterParams, TileCode, TileGrid,
};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 ---------------------------------------------------------------------------

fn stl_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5714);
    let (mut cases, mut points, mut sign_checked) = (0, 0, 0);
    for _ in 0..1000 {
        let phi = random_formula(&mut rng, 4);
        let trace = random_trace(&mut rng, 50);
        ensure(phi.depth() <= 4, || format!("generator produced depth {}", phi.depth()))?;
        for i in 0..trace.len() {
            let expected = brute_sat(&phi, &trace, i);
            let got = monitor_bool(&phi, &trace, i).map_err(|e| e.to_string())?;
            ensure(got == expected, || {
                format!("{phi} at {i}: monitor {got}, oracle {expected}")
            })?;
            let rho = monitor_robust(&phi, &trace, i).map_err(|e| e.to_string())?;
            let rho_oracle = brute_rho(&phi, &trace, i);
            ensure(rho == rho_oracle, || {
                format!("{phi} at {i}: rho {rho}, oracle {rho_oracle}")
            })?;
            if rho.abs() > 1e-9 {
                sign_checked += 1;
                ensure((rho > 0.0) == got, || {
                    format!("{phi} at {i}: rho {rho} but verdict {got}")
                })?;
            }
            points += 1;
        }
        cases += 1;
    }
    Ok(format!(
        "{cases}/1000 formula-trace pairs agree at all {points} sample instants; sign consistent at {sign_checked}"
    ))
}

// 2 ---------------------------------------------------------------------------

fn reference_formulas() -> Outcome {
    let phi1 = parse_stl("G(e1 < 10)").map_err(|e| e.to_string())?;
    let phi2 = parse_stl("G(d1 < 10)").map_err(|e| e.to_string())?;
    let phi3 = parse_stl("G((e1 > 10) -> F[1,3](G(d1 < 10 & e1 < 10)))").map_err(|e| e.to_string())?;
    let recovery = unit_trace(&[
        ("e1", &[12.0, 12.0, 8.0, 8.0, 8.0, 8.0]),
        ("d1", &[15.0, 15.0, 6.0, 6.0, 6.0, 6.0]),
    ]);
    let late = unit_trace(&[
        ("e1", &[12.0, 12.0, 8.0, 8.0, 8.0, 8.0]),
        ("d1", &[15.0, 15.0, 15.0, 15.0, 6.0, 6.0]),
    ]);
    let cases: [(&str, &StlFormula, Trace, bool, Option<f64>); 6] = [
        ("phi1, e1 = 5", &phi1, unit_trace(&[("e1", &[5.0; 6])]), true, Some(5.0)),
        (
            "phi1, e1 spikes to 12",
            &phi1,
            unit_trace(&[("e1", &[5.0, 5.0, 12.0, 5.0])]),
            false,
            Some(-2.0),
        ),
        ("phi2, d1 = 3", &phi2, unit_trace(&[("d1", &[3.0; 6])]), true, Some(7.0)),
        (
            "phi2, d1 peaks at 15",
            &phi2,
            unit_trace(&[("d1", &[1.0, 15.0, 9.0])]),
            false,
            Some(-5.0),
        ),
        ("phi3, recovery inside [1,3]", &phi3, recovery.clone(), true, None),
        ("phi3, recovery too late", &phi3, late, false, None),
    ];
    for (name, phi, trace, sat, rho) in &cases {
        let v = monitor(phi, trace).map_err(|e| e.to_string())?;
        ensure(v.satisfied == *sat, || format!("{name}: got {}", v.satisfied))?;
        ensure(brute_sat(phi, trace, 0) == *sat, || format!("{name}: oracle disagrees"))?;
        if let Some(r) = rho {
            ensure((v.robustness - r).abs() < 1e-12, || {
                format!("{name}: rho {}", v.robustness)
            })?;
        }
    }
    // The recovery trace is exactly what phi1 forbids.
    let v = monitor(&phi1, &recovery).map_err(|e| e.to_string())?;
    ensure(!v.satisfied, || "phi1 accepted the recovery trace".into())?;
    Ok("6/6 hand-built cases; recovery trace accepted by phi3 and rejected by phi1".into())
}

// 3 ---------------------------------------------------------------------------

/// Straight segment from `a` to `b` with control points at the Greville
/// abscissae, so the parameterization is exactly linear.
fn segment(a: Point2, b: Point2, n: usize) -> Spline2D {
    let segs = (n - 3) as f64;
    let knot = |i: usize| ((i as f64 - 3.0).max(0.0) / segs).min(1.0);
    let pts = (0..n)
        .map(|i| a.lerp(&b, (knot(i + 1) + knot(i + 2) + knot(i + 3)) / 3.0))
        .collect();
    Spline2D::new(pts, false).unwrap()
}

fn distance_metrics() -> Outcome {
    let metric = |p: f64| {
        if p.is_infinite() {
            CurveMetricParams::sup(1024)
        } else {
            CurveMetricParams::new(p, 1024).unwrap()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let base = random_spline(&mut rng, 8, 20.0);
        let shifted = base.translated(Point2::new(3.0, 4.0));
        for p in [1.0, 2.0, f64::INFINITY] {
            let d = distance_lp(&base, &shifted, metric(p)).map_err(|e| e.to_string())?;
            worst = worst.max((d - 5.0).abs());
        }
    }
    // Linearly growing separation |d(t)| = t: d_p = (p + 1)^(-1/p), d_inf = 1.
    let a = segment(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), 7);
    let b = segment(Point2::new(0.0, 0.0), Point2::new(10.0, 1.0), 7);
    for (p, closed) in [(1.0, 0.5), (2.0, 1.0 / 3f64.sqrt()), (f64::INFINITY, 1.0)] {
        let d = distance_lp(&a, &b, metric(p)).map_err(|e| e.to_string())?;
        worst = worst.max((d - closed).abs());
    }
    ensure(worst <= 1e-6, || format!("analytic error {worst:e}"))?;

    let ps = [1.0, 1.5, 2.0, 3.0, 8.0, f64::INFINITY];
    for pair in 0..100 {
        let (n1, n2) = (rng.gen_range(4..10), rng.gen_range(4..10));
        let s1 = random_spline(&mut rng, n1, 50.0);
        let s2 = random_spline(&mut rng, n2, 50.0);
        let ds: Vec<f64> = ps.iter().map(|&p| distance_lp(&s1, &s2, metric(p)).unwrap()).collect();
        for w in ds.windows(2) {
            ensure(w[0] <= w[1] * (1.0 + 1e-12), || {
                format!("pair {pair}: {ds:?} not monotone")
            })?;
        }
    }
    Ok(format!(
        "analytic max error {worst:.1e}; monotone in p on 100/100 random pairs"
    ))
}

// 4 ---------------------------------------------------------------------------

fn reconstruction_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let params = RasterParams {
        grid_width: 128,
        grid_height: 128,
        road_halfwidth: 1.0,
        samples: 512,
    };
    let mut ok = 0;
    let mut errors = Vec::new();
    for _ in 0..20 {
        let original = random_road(&mut rng, 10);
        let (mask, transform) = rasterize_with_transform(&original, &params).map_err(|e| e.to_string())?;
        let scaled = transform.apply_spline(&original);
        let contours = trace_contour(&mask).map_err(|e| e.to_string())?;
        let line = centerline(&contours[0]).map_err(|e| e.to_string())?;
        let mut recovered = contour_to_spline(&line, 12, 2).map_err(|e| e.to_string())?;
        let start = scaled.eval(0.0).unwrap();
        if recovered.eval(0.0).unwrap().distance(&start) > recovered.eval(1.0).unwrap().distance(&start) {
            recovered = recovered.reversed();
        }
        let d = distance_lp(&scaled, &recovered, CurveMetricParams::sup(1024)).map_err(|e| e.to_string())?;
        if d <= 2.0 {
            ok += 1;
        }
        errors.push(d);
    }
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let summary = format!("{ok}/20 within 2 cells (worst d_inf {worst:.2})");
    ensure(ok >= 18, || summary.clone())?;
    Ok(summary)
}

// 5 ---------------------------------------------------------------------------

fn independent_d1(base: &Spline2D, variant: &Spline2D, grid: &ParamGrid) -> Vec<f64> {
    (0..grid.samples)
        .map(|k| {
            let t = k as f64 / (grid.samples - 1) as f64;
            base.eval(t).unwrap().distance(&variant.eval(t).unwrap())
        })
        .collect()
}

fn filter_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = random_road(&mut rng, 10);
    let phi2 = parse_stl("G(d1 < 10)").map_err(|e| e.to_string())?;
    let ranges = SamplingRanges {
        terms: 2,
        amplitude: Range::new(0.0, 8.0),
        ..SamplingRanges::default()
    };
    let options = VariantOptions::default();
    let batch = generate_variants(&base, &phi2, 200, &ranges, 2024, 5000, options).map_err(|e| e.to_string())?;
    let mut violations = 0;
    for v in &batch.accepted {
        let d1 = independent_d1(&base, &v.spline, &options.grid);
        let trace = Trace::from_columns(options.grid.timestamps(), [(D1.to_string(), d1)].into()).unwrap();
        if !brute_sat(&phi2, &trace, 0) || brute_rho(&phi2, &trace, 0) <= 0.0 {
            violations += 1;
        }
    }
    ensure(batch.accepted.len() == 200, || {
        format!("accepted {}", batch.accepted.len())
    })?;
    ensure(violations == 0, || {
        format!("{violations} accepted variants violate phi2")
    })?;

    let again = generate_variants(&base, &phi2, 200, &ranges, 2024, 5000, options).map_err(|e| e.to_string())?;
    ensure(again == batch, || "same seed produced a different batch".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_batch(&batch, "G(d1 < 10)", &a).map_err(|e| e.to_string())?;
    write_batch(&again, "G(d1 < 10)", &b).map_err(|e| e.to_string())?;
    let files = same_tree(&a, &b)?;
    Ok(format!(
        "0 violations over 200 accepted ({} rejected); {files} output files byte-identical across runs",
        batch.rejected_count
    ))
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut other: Vec<_> = std::fs::read_dir(b)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    other.sort();
    ensure(names == other, || "directory listings differ".into())?;
    for n in &names {
        let (x, y) = (std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap());
        ensure(x == y, || format!("{n:?} differs"))?;
    }
    Ok(names.len())
}

// 6 ---------------------------------------------------------------------------

/// Reference connectivity check: breadth-first flood over 4-neighbors.
fn four_connected(mask: &BinaryMask) -> bool {
    let (w, h) = (mask.width(), mask.height());
    let cells: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .collect();
    let Some(&first) = cells.first() else { return true };
    let mut seen = std::collections::HashSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some((x, y)) = queue.pop_front() {
        let mut next = vec![];
        if x > 0 {
            next.push((x - 1, y));
        }
        if y > 0 {
            next.push((x, y - 1));
        }
        if x + 1 < w {
            next.push((x + 1, y));
        }
        if y + 1 < h {
            next.push((x, y + 1));
        }
        for c in next {
            if mask.get(c.0, c.1) && seen.insert(c) {
                queue.push_back(c);
            }
        }
    }
    seen.len() == cells.len()
}

fn tile_coding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for code in 0u8..16 {
        for _ in 0..4 {
            // Diagonals are random: they must never affect the code.
            let diag: [bool; 4] = std::array::from_fn(|_| rng.gen_bool(0.5));
            let mask = BinaryMask::from_fn(3, 3, |x, y| match (x, y) {
                (1, 1) => true,
                (1, 0) => code & 1 != 0,
                (2, 1) => code & 2 != 0,
                (1, 2) => code & 4 != 0,
                (0, 1) => code & 8 != 0,
                (x, y) => diag[x / 2 + y],
            })
            .unwrap();
            let got = code_neighborhood(&mask, 1, 1).map_err(|e| e.to_string())?;
            ensure(got == TileCode::new(code).unwrap(), || {
                format!("code {code}: got {got:?}")
            })?;
        }
    }
    let mut halfwidths = Vec::new();
    for i in 0..50 {
        let n = rng.gen_range(4..12);
        let spline = random_spline(&mut rng, n, 30.0);
        let hw = [0.5, 0.75, 1.0, 1.5][i % 4];
        halfwidths.push(hw);
        let params = RasterParams {
            grid_width: 64,
            grid_height: 64,
            road_halfwidth: hw,
            samples: 256,
        };
        let mask = rasterize(&spline, &params).map_err(|e| e.to_string())?;
        ensure(four_connected(&mask), || {
            format!("spline {i} (halfwidth {hw}) not 4-connected")
        })?;
        let grid = synthesize(&mask);
        for y in 0..64 {
            for x in 0..64 {
                let expected = mask.get(x, y).then(|| {
                    let on = |dx: i64, dy: i64| mask.get_signed(x as i64 + dx, y as i64 + dy);
                    u8::from(on(0, -1)) | u8::from(on(1, 0)) << 1 | u8::from(on(0, 1)) << 2 | u8::from(on(-1, 0)) << 3
                });
                ensure(grid.get(x, y).map(|c| c.value()) == expected, || {
                    format!("spline {i}: cell ({x},{y})")
                })?;
            }
        }
    }
    Ok("16/16 neighborhood codes; 50/50 random rasterizations 4-connected and coded consistently".into())
}

// 7 ---------------------------------------------------------------------------

fn random_grid(rng: &mut ChaCha8Rng) -> TileGrid {
    let (w, h) = (rng.gen_range(1..=40), rng.gen_range(1..=40));
    let density = rng.gen_range(0.0..=1.0);
    let cells = (0..w * h)
        .map(|_| {
            rng.gen_bool(density)
                .then(|| TileCode::new(rng.gen_range(0..16)).unwrap())
        })
        .collect();
    TileGrid::new(w, h, cells).unwrap()
}

fn read_dump(path: &Path) -> Result<SceneDump, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}

fn fuzz_frame(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let valid = [
        r#"{"type":"hello","protocol_version":1,"grid_width":4,"grid_height":4,"tile_size":1.0}"#,
        r#"{"type":"tile","x":1,"y":2,"code":5}"#,
        r#"{"type":"spawn","kind":"car","x":0.5,"y":1.5,"heading":0.0}"#,
        r#"{"type":"commit","scene_id":"s","tile_count":1}"#,
        r#"{"type":"clear"}"#,
    ];
    let mut frame: Vec<u8> = match rng.gen_range(0..5) {
        // Random bytes.
        0 => (0..rng.gen_range(0..80)).map(|_| rng.gen()).collect(),
        // Truncated valid message.
        1 => {
            let v = valid[rng.gen_range(0..valid.len())].as_bytes();
            v[..rng.gen_range(0..v.len())].to_vec()
        }
        // Valid message with one byte replaced by a structural character.
        2 => {
            let mut v = valid[rng.gen_range(0..valid.len())].as_bytes().to_vec();
            let i = rng.gen_range(0..v.len());
            v[i] = b"{}\":,["[rng.gen_range(0..6)];
            if decode(&v).is_ok() {
                v.truncate(i);
            }
            v
        }
        // Well-formed JSON with bad fields.
        3 => {
            let bad = [
                r#"{"type":"tile","x":1,"y":2,"code":16}"#,
                r#"{"type":"tile","x":-1,"y":2,"code":1}"#,
                r#"{"type":"tile","x":1,"y":2}"#,
                r#"{"type":"hello","protocol_version":2,"grid_width":4,"grid_height":4,"tile_size":1.0}"#,
                r#"{"type":"hello","protocol_version":1,"grid_width":0,"grid_height":4,"tile_size":1.0}"#,
                r#"{"type":"spawn","kind":"","x":0,"y":0,"heading":0}"#,
                r#"{"type":"commit","scene_id":""}"#,
                r#"{"type":"warp","x":1}"#,
                r#"{"type":7}"#,
                r#"{"x":1,"y":2,"code":3}"#,
                r#"[1,2,3]"#,
                r#""tile""#,
                r#"{"type":"ack","status":"ok","detail":""}"#,
            ];
            bad[rng.gen_range(0..bad.len())].as_bytes().to_vec()
        }
        // Mutations out of session: tile, spawn, commit before any hello.
        _ => valid[rng.gen_range(1..4)].as_bytes().to_vec(),
    };
    for b in &mut frame {
        if *b == b'\n' {
            *b = b' ';
        }
    }
    frame
}

fn protocol_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

    // Stream round trips.
    let dump = dir.path().join("stream.json");
    let server = SceneServer::bind("127.0.0.1:0", Transport::Stream, &dump)
        .map_err(|e| e.to_string())?
        .spawn()
        .map_err(|e| e.to_string())?;
    let endpoint = server.addr().to_string();
    for i in 0..20 {
        let grid = random_grid(&mut rng);
        let options = SendOptions {
            scene_id: format!("grid-{i}"),
            ..SendOptions::default()
        };
        send_scene(&grid, &[], &endpoint, &options).map_err(|e| format!("grid {i}: {e}"))?;
        let got = read_dump(&dump)?;
        ensure(got.grid == grid, || format!("grid {i} differs after round trip"))?;
        let expected = serde_json::to_vec(&grid).unwrap();
        let actual = serde_json::to_vec(&got.grid).unwrap();
        ensure(expected == actual, || format!("grid {i} not bit-exact"))?;
    }
    drop(server);

    // Datagram transport with 10% of tile messages dropped.
    let dump = dir.path().join("datagram.json");
    let server = SceneServer::bind("127.0.0.1:0", Transport::Datagram, &dump)
        .map_err(|e| e.to_string())?
        .spawn()
        .map_err(|e| e.to_string())?;
    let endpoint = server.addr().to_string();
    let options = SendOptions {
        transport: Transport::Datagram,
        scene_id: "clean".into(),
        ..SendOptions::default()
    };
    let clean = TileGrid::new(24, 24, (0..576).map(|i| TileCode::new((i % 16) as u8)).collect()).unwrap();
    send_scene(&clean, &[], &endpoint, &options).map_err(|e| format!("lossless datagram send: {e}"))?;
    let committed = std::fs::read(&dump).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for trial in 0..5 {
        let grid = TileGrid::new(
            24,
            24,
            (0..576).map(|i| TileCode::new(((i + trial) % 16) as u8)).collect(),
        )
        .unwrap();
        let lossy = SendOptions {
            scene_id: format!("lossy-{trial}"),
            ..options.clone()
        };
        let result = send_scene_filtered(&grid, &[], &endpoint, &lossy, |m| {
            !matches!(m, SceneMessage::Tile(_)) || !rng.gen_bool(0.1)
        });
        match result {
            Err(scenegen::protocol::ProtocolError::NackReceived { detail })
                if detail.starts_with("tile count mismatch") =>
            {
                mismatches += 1
            }
            other => return Err(format!("lossy trial {trial}: {other:?}")),
        }
        ensure(std::fs::read(&dump).unwrap() == committed, || {
            "lossy send changed the dump".into()
        })?;
    }
    drop(server);

    // Fuzzing over a live stream connection.
    let dump = dir.path().join("fuzz.json");
    let server = SceneServer::bind("127.0.0.1:0", Transport::Stream, &dump)
        .map_err(|e| e.to_string())?
        .spawn()
        .map_err(|e| e.to_string())?;
    let frames: Vec<Vec<u8>> = (0..10_000).map(|_| fuzz_frame(&mut rng)).collect();
    let conn = TcpStream::connect(server.addr()).map_err(|e| e.to_string())?;
    conn.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    let mut writer = conn.try_clone().unwrap();
    let sender = std::thread::spawn(move || {
        for f in &frames {
            writer.write_all(f).unwrap();
            writer.write_all(b"\n").unwrap();
        }
        writer.flush().unwrap();
    });
    let mut reader = BufReader::new(conn);
    let mut line = String::new();
    for n in 0..10_000 {
        line.clear();
        reader.read_line(&mut line).map_err(|e| format!("reply {n}: {e}"))?;
        match decode(line.as_bytes()) {
            Ok(SceneMessage::Ack(ack)) if !ack.is_ok() => {}
            other => return Err(format!("fuzz reply {n}: {other:?}")),
        }
    }
    sender.join().map_err(|_| "fuzz sender panicked".to_string())?;
    // The stream server serves one connection at a time.
    drop(reader);
    ensure(!dump.exists(), || "fuzzing produced a committed dump".into())?;
    let grid = random_grid(&mut rng);
    send_scene(&grid, &[], &server.addr().to_string(), &SendOptions::default())
        .map_err(|e| format!("server unusable after fuzzing: {e}"))?;
    ensure(read_dump(&dump)?.grid == grid, || "post-fuzz scene differs".into())?;
    Ok(format!(
        "20/20 stream grids bit-exact; {mismatches}/5 lossy datagram sends rejected with tile count mismatch; 10000/10000 fuzz frames answered with error acks"
    ))
}

// 8 ---------------------------------------------------------------------------

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_pgm(&road_image(160, 120, 4.0), &dir.path().join("road.pgm")).map_err(|e| e.to_string())?;
    let dump = dir.path().join("dump.json");
    let server = SceneServer::bind("127.0.0.1:0", Transport::Stream, &dump)
        .map_err(|e| e.to_string())?
        .spawn()
        .map_err(|e| e.to_string())?;
    let halfwidth = 1.0;
    let config = serde_json::json!({
        "image": "road.pgm",
        "fit": {"n_ctrl": 12, "stride": 2},
        "perturb": {"spec": "G(e1 < 10)", "n": 5, "seed": 11, "max_attempts": 200},
        "raster": {"grid_width": 64, "grid_height": 48, "road_halfwidth": halfwidth, "samples": 512},
        "endpoint": server.addr().to_string(),
        "transport": "stream",
        "tile_size": 2.0
    });
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    let out = dir.path().join("out");
    let report = cmd_pipeline(&config_path, &out, &PipelineOverrides::default()).map_err(|e| e.to_string())?;
    ensure(report.ack.is_some(), || "no acknowledgement".into())?;
    ensure(out.join(VARIANTS_DIR).join("manifest.json").exists(), || {
        "manifest missing".into()
    })?;

    let scene = read_dump(&dump)?;
    let grid = &scene.grid;
    ensure(grid.road_count() > 0, || "committed grid is empty".into())?;
    let mask = grid.to_mask();
    ensure(four_connected(&mask), || "committed grid is not 4-connected".into())?;

    let raster = RasterParams {
        grid_width: 64,
        grid_height: 48,
        road_halfwidth: halfwidth,
        samples: 512,
    };
    let (_, transform) = rasterize_with_transform(&report.base, &raster).map_err(|e| e.to_string())?;
    let curve: Vec<Point2> = transform.apply_spline(&report.base).sample_uniform(4096);
    let cells: Vec<_> = grid.road_cells().collect();
    let near = cells
        .iter()
        .filter(|(x, y, _)| {
            let c = Point2::new(*x as f64, *y as f64);
            curve.iter().any(|p| p.distance(&c) <= halfwidth + 1.0)
        })
        .count();
    let share = near as f64 / cells.len() as f64;
    ensure(share >= 0.9, || {
        format!("only {:.1}% of cells near the spline", 100.0 * share)
    })?;
    ensure(scene.agents.len() == 1, || format!("{} agents", scene.agents.len()))?;

    // A second run with the same config reproduces every output byte.
    let first_dump = std::fs::read(&dump).map_err(|e| e.to_string())?;
    let out2 = dir.path().join("out2");
    cmd_pipeline(&config_path, &out2, &PipelineOverrides::default()).map_err(|e| e.to_string())?;
    ensure(std::fs::read(&dump).unwrap() == first_dump, || {
        "second run changed the dump".into()
    })?;
    let files = same_tree(&out.join(VARIANTS_DIR), &out2.join(VARIANTS_DIR))?;
    Ok(format!(
        "{} road cells, 4-connected, {:.1}% within halfwidth + 1 of the fitted spline; rerun identical ({files} variant files)",
        cells.len(),
        100.0 * share
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "STL oracle equivalence",
            Duration::from_secs(30),
            stl_oracle_equivalence,
        ),
        ("reference formulas", Duration::from_secs(1), reference_formulas),
        ("distance metrics", Duration::from_secs(10), distance_metrics),
        (
            "reconstruction round trip",
            Duration::from_secs(60),
            reconstruction_round_trip,
        ),
        ("filter soundness", Duration::from_secs(60), filter_soundness),
        ("tile coding", Duration::from_secs(10), tile_coding),
        ("protocol fidelity", Duration::from_secs(60), protocol_fidelity),
        ("end to end", Duration::from_secs(30), end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
