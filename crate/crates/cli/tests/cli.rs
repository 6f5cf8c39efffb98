//! End-to-end tests of the `flowdmd` binary: every subcommand against
//! small fixtures, output-file structure, exit codes, and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowdmd_core::formats;
use flowdmd_core::ingest::snapshot_from_records;

fn flowdmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowdmd"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn flowdmd");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Two places, three weeks, hand-checkable flows.
fn write_small_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("flows.csv");
    let mut text = String::from("geoid_o,geoid_d,date_range,visitor_flows\n");
    text.push_str("01,02,2019-01-07 - 2019-01-13,4\n");
    text.push_str("02,01,2019-01-07 - 2019-01-13,2\n");
    text.push_str("01,02,2019-01-14 - 2019-01-20,6\n");
    text.push_str("01,01,2019-01-21 - 2019-01-27,10\n");
    text.push_str("02,01,2019-01-21 - 2019-01-27,8\n");
    fs::write(&path, text).unwrap();
    path
}

/// Geometric decay on a 2-place network: exactly rank-1 dynamics, so fits
/// and forecasts are exact and every week's flow is predictable by hand.
fn write_decay_fixture(dir: &Path, weeks: usize) -> PathBuf {
    let path = dir.join("decay.csv");
    let mut text = String::from("geoid_o,geoid_d,date_range,visitor_flows\n");
    let start = chrono::NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
    for w in 0..weeks {
        let date = start + chrono::Days::new(7 * w as u64);
        let scale = 1000.0 * 0.9f64.powi(w as i32);
        text.push_str(&format!("01,02,{date},{}\n", 2.0 * scale));
        text.push_str(&format!("02,01,{date},{}\n", 4.0 * scale));
        text.push_str(&format!("01,01,{date},{}\n", 3.0 * scale));
        text.push_str(&format!("02,02,{date},{scale}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn ingest_small_fixture_writes_snapshot_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_small_fixture(dir.path());
    let out = dir.path().join("out");

    let output = run_ok(flowdmd()
        .arg("ingest")
        .arg("--input")
        .arg(&csv)
        .arg("--out")
        .arg(&out));

    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("k 2"));
    assert!(stdout.contains("m 3"));
    assert!(stdout.contains("week 2019-01-07 total 6"));

    let snapshot_path = out.join("snapshot.txt");
    let snapshots =
        formats::read_snapshot(std::io::BufReader::new(fs::File::open(&snapshot_path).unwrap()))
            .unwrap();
    assert_eq!(snapshots.k(), 2);
    assert_eq!(snapshots.num_weeks(), 3);
    // Week 1: A = [[0,4],[2,0]] -> S = [[0,3],[3,0]] -> column (0,3,3,0).
    assert_eq!(snapshots.column(0), &[0.0, 3.0, 3.0, 0.0]);
    // Week 3: diagonal preserved, off-diagonal averaged (0+8)/2 = 4.
    assert_eq!(snapshots.column(2), &[10.0, 4.0, 4.0, 0.0]);
}

#[test]
fn ingest_fails_on_empty_directory_and_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();

    let output = flowdmd().arg("ingest").arg("--input").arg(&empty).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("no .csv files"));

    let output = flowdmd().arg("ingest").output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn ingest_reports_row_context_for_bad_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(
        &path,
        "geoid_o,geoid_d,date_range,visitor_flows\n01,02,2019-01-07,5\n01,02,2019-01-07,-3\n",
    )
    .unwrap();
    let output = flowdmd().arg("ingest").arg("--input").arg(&path).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bad.csv"), "stderr should name the file: {stderr}");
    assert!(stderr.contains("row 3"), "stderr should name the row: {stderr}");
}

#[test]
fn ingest_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_small_fixture(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(flowdmd().arg("ingest").arg("--input").arg(&csv).arg("--out").arg(&out_a));
    run_ok(flowdmd().arg("ingest").arg("--input").arg(&csv).arg("--out").arg(&out_b));
    let a = fs::read(out_a.join("snapshot.txt")).unwrap();
    let b = fs::read(out_b.join("snapshot.txt")).unwrap();
    assert_eq!(a, b);
}

fn ingest_decay(dir: &Path, weeks: usize) -> PathBuf {
    let csv = write_decay_fixture(dir, weeks);
    let out = dir.join("ingested");
    run_ok(flowdmd().arg("ingest").arg("--input").arg(&csv).arg("--out").arg(&out));
    out.join("snapshot.txt")
}

#[test]
fn fit_writes_one_model_per_rank_and_warns_on_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 10);
    let out = dir.path().join("models");

    let output = run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("1:8")
        .arg("--rank")
        .arg("1,2")
        .arg("--out")
        .arg(&out));

    assert!(out.join("model_r1.dmd").exists());
    assert!(out.join("model_r2.dmd").exists());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("model_r1.dmd: requested 1 retained 1"));
    assert!(stdout.contains("spectral radius"));
    // The decay fixture is rank-1, so rank 2 must warn and truncate.
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("warning"), "expected truncation warning, got: {stderr}");

    let model = flowdmd_core::dmd::read_model_file(out.join("model_r1.dmd")).unwrap();
    assert_eq!(model.rank(), 1);
    assert!((model.discrete_eigs()[0].re - 0.9).abs() < 1e-8);
}

#[test]
fn predict_emits_forecast_and_pair_series() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 10);
    let out = dir.path().join("work");
    run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--rank")
        .arg("1")
        .arg("--out")
        .arg(&out));

    run_ok(flowdmd()
        .arg("predict")
        .arg("--model")
        .arg(out.join("model_r1.dmd"))
        .arg("--input")
        .arg(&snapshot)
        .arg("--horizon")
        .arg("12")
        .arg("--pair")
        .arg("01:02")
        .arg("--out")
        .arg(&out));

    let forecast = formats::read_forecast(std::io::BufReader::new(
        fs::File::open(out.join("forecast_r1.txt")).unwrap(),
    ))
    .unwrap();
    assert_eq!(forecast.columns.cols(), 12);
    assert_eq!(forecast.rank, 1);

    // Horizon column 0 equals predict(t = 0) equals the first snapshot
    // for this exactly rank-1 fixture.
    let col0 = forecast.columns.column(0);
    assert!((col0[1] - 3.0 * 1000.0).abs() < 1e-6); // (2*1000 + 4*1000)/2

    let pair_file = fs::read_to_string(out.join("pair_01_02_r1.txt")).unwrap();
    let lines: Vec<&str> = pair_file.lines().collect();
    assert_eq!(lines.len(), 12);
    let first: Vec<&str> = lines[0].split_whitespace().collect();
    assert_eq!(first[0], "0");
    let value: f64 = first[1].parse().unwrap();
    assert!((value - 3000.0).abs() < 1e-6);
    // Geometric decay continues past training: week 10 = 3000 * 0.9^10.
    let last: Vec<&str> = lines[11].split_whitespace().collect();
    let value: f64 = last[1].parse().unwrap();
    assert!((value - 3000.0 * 0.9f64.powi(11)).abs() < 1e-5);
}

#[test]
fn evaluate_writes_error_table_in_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 12);
    let out = dir.path().join("work");
    run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("1:8")
        .arg("--rank")
        .arg("1")
        .arg("--out")
        .arg(&out));

    let output = run_ok(flowdmd()
        .arg("evaluate")
        .arg("--model")
        .arg(out.join("model_r1.dmd"))
        .arg("--input")
        .arg(&snapshot)
        .arg("--test-weeks")
        .arg("9:12")
        .arg("--out")
        .arg(&out));

    let table = fs::read_to_string(out.join("errors_r1.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "week,truth_l2,dmd_l2,rel_l2,rel_linf");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    // Exact rank-1 dynamics forecast exactly.
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let rel_l2: f64 = fields[3].parse().unwrap();
        assert!(rel_l2 < 1e-9, "row {row}");
    }
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("week,truth_l2,dmd_l2,rel_l2,rel_linf"));

    // Requesting weeks beyond the data is a coverage error.
    let output = flowdmd()
        .arg("evaluate")
        .arg("--model")
        .arg(out.join("model_r1.dmd"))
        .arg("--input")
        .arg(&snapshot)
        .arg("--test-weeks")
        .arg("9:20")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("not present"));
}

#[test]
fn evaluate_anchors_time_to_the_model_training_start() {
    // A model trained on weeks 3..8 has its clock anchored at week 3;
    // evaluation of later weeks must use the calendar offset, not the
    // week index. The rank-1 fixture stays exact either way only if the
    // anchoring is right.
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 12);
    let out = dir.path().join("work");
    run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("3:8")
        .arg("--rank")
        .arg("1")
        .arg("--out")
        .arg(&out));
    run_ok(flowdmd()
        .arg("evaluate")
        .arg("--model")
        .arg(out.join("model_r1.dmd"))
        .arg("--input")
        .arg(&snapshot)
        .arg("--test-weeks")
        .arg("9:12")
        .arg("--out")
        .arg(&out));
    let table = fs::read_to_string(out.join("errors_r1.csv")).unwrap();
    for row in table.lines().skip(1) {
        let rel_l2: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rel_l2 < 1e-9, "row {row}");
    }
}

#[test]
fn spectrum_writes_listing_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 10);
    let out = dir.path().join("spectra");

    run_ok(flowdmd()
        .arg("spectrum")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("1:8")
        .arg("--out")
        .arg(&out));

    let listing = fs::read_to_string(out.join("spectrum.txt")).unwrap();
    let lines: Vec<&str> = listing.lines().collect();
    // Window of 8 snapshots: x has 7 columns, min(4, 7) = 4 values.
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("1 "));

    let values: Vec<f64> = lines
        .iter()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    // Rank-1 fixture: one dominant value, the rest at round-off.
    assert!(values[0] > 0.0);
    for v in &values[1..] {
        assert!(*v <= 1e-12 * values[0]);
    }

    let svg = fs::read_to_string(out.join("spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn plot_builds_multi_series_svg_aligned_by_date() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 12);
    let out = dir.path().join("work");
    run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("1:8")
        .arg("--rank")
        .arg("1")
        .arg("--out")
        .arg(&out));
    run_ok(flowdmd()
        .arg("predict")
        .arg("--model")
        .arg(out.join("model_r1.dmd"))
        .arg("--horizon")
        .arg("12")
        .arg("--out")
        .arg(&out));

    run_ok(flowdmd()
        .arg("plot")
        .arg("--input")
        .arg(&snapshot)
        .arg("--forecast")
        .arg(out.join("forecast_r1.txt"))
        .arg("--pair")
        .arg("01:02")
        .arg("--out")
        .arg(&out));

    let svg = fs::read_to_string(out.join("pair_01_02.svg")).unwrap();
    assert!(svg.contains("truth"));
    assert!(svg.contains("r=1"));
    assert_eq!(svg.matches("<polyline").count(), 2);

    // Truth-only figure when no forecasts are given.
    run_ok(flowdmd()
        .arg("plot")
        .arg("--input")
        .arg(&snapshot)
        .arg("--pair")
        .arg("1:2")
        .arg("--out")
        .arg(&out));
    let svg = fs::read_to_string(out.join("pair_1_2.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);

    // Several forecasts with different training anchors in one figure.
    let later = dir.path().join("later");
    run_ok(flowdmd()
        .arg("fit")
        .arg("--input")
        .arg(&snapshot)
        .arg("--train-weeks")
        .arg("3:10")
        .arg("--rank")
        .arg("1")
        .arg("--out")
        .arg(&later));
    run_ok(flowdmd()
        .arg("predict")
        .arg("--model")
        .arg(later.join("model_r1.dmd"))
        .arg("--horizon")
        .arg("10")
        .arg("--out")
        .arg(&later));
    run_ok(flowdmd()
        .arg("plot")
        .arg("--input")
        .arg(&snapshot)
        .arg("--forecast")
        .arg(out.join("forecast_r1.txt"))
        .arg("--forecast")
        .arg(later.join("forecast_r1.txt"))
        .arg("--pair")
        .arg("01:02")
        .arg("--out")
        .arg(&later));
    let svg = fs::read_to_string(later.join("pair_01_02.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_small_fixture(dir.path());
    let out = dir.path().join("from_config");
    let config_path = dir.path().join("run.conf");
    fs::write(
        &config_path,
        format!("input = {}\nout = {}\n", csv.display(), out.display()),
    )
    .unwrap();

    run_ok(flowdmd().arg("ingest").arg("--config").arg(&config_path));
    assert!(out.join("snapshot.txt").exists());

    // Flag wins over the config value.
    let out_flag = dir.path().join("from_flag");
    run_ok(flowdmd()
        .arg("ingest")
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_flag));
    assert!(out_flag.join("snapshot.txt").exists());
}

#[test]
fn ingest_with_population_flow_inference() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pop.csv");
    fs::write(
        &path,
        "geoid_o,geoid_d,date_range,visitor_flows,pop_o,devices_o\n\
         01,02,2019-01-07,250,5000000,125000\n\
         02,01,2019-01-07,100,1000,1000\n",
    )
    .unwrap();
    let out = dir.path().join("out");

    run_ok(flowdmd()
        .arg("ingest")
        .arg("--input")
        .arg(&path)
        .arg("--col-pop")
        .arg("pop_o")
        .arg("--col-devices")
        .arg("devices_o")
        .arg("--pop-flow")
        .arg("--out")
        .arg(&out));

    let snapshots = formats::read_snapshot(std::io::BufReader::new(
        fs::File::open(out.join("snapshot.txt")).unwrap(),
    ))
    .unwrap();
    // 250 * 5e6 / 125e3 = 10000 one way, 100 * 1 the other; symmetrized.
    assert_eq!(snapshots.column(0)[1], (10000.0 + 100.0) / 2.0);

    // Without the column mappings the flag is an error.
    let output = flowdmd()
        .arg("ingest")
        .arg("--input")
        .arg(&path)
        .arg("--pop-flow")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn fit_and_spectrum_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = ingest_decay(dir.path(), 10);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(flowdmd()
            .arg("fit")
            .arg("--input")
            .arg(&snapshot)
            .arg("--rank")
            .arg("1")
            .arg("--out")
            .arg(out));
        run_ok(flowdmd()
            .arg("spectrum")
            .arg("--input")
            .arg(&snapshot)
            .arg("--out")
            .arg(out));
    }
    for name in ["model_r1.dmd", "spectrum.txt", "spectrum.svg"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn snapshot_file_round_trips_through_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_small_fixture(dir.path());
    let out = dir.path().join("out");
    run_ok(flowdmd().arg("ingest").arg("--input").arg(&csv).arg("--out").arg(&out));

    // The CLI's file equals the in-memory pipeline result exactly.
    let map = flowdmd_core::ingest::ColumnMap::default();
    let records =
        flowdmd_core::ingest::parse_flow_csv(fs::File::open(&csv).unwrap(), &map).unwrap();
    let expected = snapshot_from_records(&records).unwrap();
    let loaded = formats::read_snapshot(std::io::BufReader::new(
        fs::File::open(out.join("snapshot.txt")).unwrap(),
    ))
    .unwrap();
    assert_eq!(loaded, expected);
}
