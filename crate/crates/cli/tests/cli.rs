use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdo_cli::{ExperimentSpec, Format, Mode, TopologyKind};
use pdo_core::{Combine, Window};
use proptest::prelude::*;
use tempfile::TempDir;

fn pdo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn run_ok(args: &[&str]) {
    let out = pdo(args);
    assert!(
        out.status.success(),
        "pdo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .map(|cell| {
                    let v: f64 = cell.parse().unwrap_or_else(|_| panic!("bad cell `{cell}`"));
                    assert!(
                        v.is_finite(),
                        "non-finite cell `{cell}` in {}",
                        path.display()
                    );
                    v
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn linear_lossless_is_identity() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "lin");
    run_ok(&[
        "linear",
        "--f0",
        "1",
        "--rho",
        "0",
        "--grid",
        "0.02:0.5:25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let (header, rows) = read_csv(&out.join("linear.csv"));
    assert_eq!(header, ["r", "fd_linear", "fd_hz"]);
    assert_eq!(rows.len(), 25);
    for row in rows {
        assert!((row[column(&header, "fd_linear")] - row[0]).abs() < 1e-12);
    }
}

#[test]
fn simulate_finds_square_wave() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "sim");
    run_ok(&[
        "simulate",
        "--f0",
        "1",
        "--rho",
        "0.001",
        "--ratio",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let (header, rows) = read_csv(&out.join("trace.csv"));
    assert_eq!(header, ["n", "x", "v", "bit", "level"]);
    assert_eq!(rows.len(), 8192);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["bit_pattern"]["period"], 4);
    let pattern = summary["bit_pattern"]["pattern"].as_str().unwrap();
    assert!("11001100".contains(pattern), "{pattern}");
    assert!((summary["fd_transitions"].as_f64().unwrap() - 0.25).abs() < 1e-3);
}

#[test]
fn compare_prefers_double_near_nyquist() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "cmp");
    run_ok(&[
        "compare",
        "--f0",
        "1",
        "--rho",
        "0.05",
        "--grid",
        "0.4:0.48:9",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("compare-summary.json"));
    let single = summary["single"]["mean_deviation"].as_f64().unwrap();
    let double = summary["double"]["mean_deviation"].as_f64().unwrap();
    assert!(double < single, "double {double} single {single}");
    assert_eq!(summary["double_is_closer"], true);
    for name in ["compare-single.csv", "compare-double.csv"] {
        let (header, rows) = read_csv(&out.join(name));
        assert_eq!(header, ["r", "fd_est", "fd_linear", "deviation"]);
        assert_eq!(rows.len(), 9);
    }
}

#[test]
fn sweep_and_spectrum_outputs() {
    let dir = TempDir::new().unwrap();
    let sweep = out_arg(&dir, "sweep");
    run_ok(&[
        "sweep",
        "--f0",
        "1",
        "--rho",
        "0.05",
        "--grid",
        "0.05:0.95:19",
        "--measure",
        "2048",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    let (_, rows) = read_csv(&sweep.join("sweep.csv"));
    assert_eq!(rows.len(), 19);
    assert!(sweep.join("sweep-summary.json").exists());

    let spec = out_arg(&dir, "spec");
    run_ok(&[
        "spectrum",
        "--f0",
        "1000",
        "--rho",
        "0.001",
        "--fs",
        "4000",
        "--window",
        "hann",
        "--out",
        spec.to_str().unwrap(),
    ]);
    let (header, rows) = read_csv(&spec.join("spectrum.csv"));
    assert_eq!(header, ["freq_norm", "freq_hz", "magnitude"]);
    assert_eq!(rows.last().unwrap()[1], 2000.0);
    let summary = read_json(&spec.join("spectrum-summary.json"));
    assert!((summary["peak_frequency_hz"].as_f64().unwrap() - 1000.0).abs() < 1.0);
}

#[test]
fn json_format_writes_tables_as_json() {
    let dir = TempDir::new().unwrap();
    let out = out_arg(&dir, "j");
    run_ok(&[
        "linear",
        "--f0",
        "1",
        "--rho",
        "0.1",
        "--grid",
        "0.1:0.3:3",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = read_json(&out.join("linear.json"));
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert!(!out.join("linear.csv").exists());
}

#[test]
fn spec_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("exp.json");
    fs::write(
        &spec,
        r#"{"mode": "sweep", "f0": 1, "rho": 0.001, "ratio": 0.3, "measure": 512}"#,
    )
    .unwrap();
    let out = out_arg(&dir, "o");
    // Positional mode and --fs override the file.
    run_ok(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--fs",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["config"]["ratio"], 0.25);
    assert_eq!(summary["config"]["measure_samples"], 512);
}

#[test]
fn spec_errors_exit_2_naming_the_key() {
    let out = pdo(&["simulate", "--f0", "1", "--rho", "1.2", "--ratio", "0.25"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`rho`"));

    let out = pdo(&[
        "simulate", "--f0", "1", "--rho", "0.1", "--ratio", "0.25", "--fs", "4",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, r#"{"f0": 1, "rho": 0.1, "ratio": 0.25, "fs": 4}"#).unwrap();
    let out = pdo(&["simulate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mutually exclusive"));

    fs::write(&spec, r#"{"f0": 1, "rho": 0.1, "ratio": 0.25, "gain": 4}"#).unwrap();
    let out = pdo(&["simulate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gain"));

    let out = pdo(&["simulate", "--spec", "/nonexistent/exp.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = pdo(&[
        "linear",
        "--f0",
        "1",
        "--rho",
        "0",
        "--grid",
        "0.1:0.2:2",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let modes: [&[&str]; 3] = [
        &[
            "simulate",
            "--f0",
            "1",
            "--rho",
            "0.01",
            "--ratio",
            "0.31",
            "--topology",
            "double",
        ],
        &[
            "sweep",
            "--f0",
            "1",
            "--rho",
            "0.05",
            "--grid",
            "0.1:0.5:17",
            "--measure",
            "1024",
        ],
        &["spectrum", "--f0", "1", "--rho", "0.01", "--ratio", "0.37"],
    ];
    for (i, args) in modes.iter().enumerate() {
        let a = out_arg(&dir, &format!("a{i}"));
        let b = out_arg(&dir, &format!("b{i}"));
        for out in [&a, &b] {
            let mut full = args.to_vec();
            full.extend(["--out", out.to_str().unwrap()]);
            run_ok(&full);
        }
        let mut names: Vec<_> = fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            assert_eq!(
                fs::read(a.join(&name)).unwrap(),
                fs::read(b.join(&name)).unwrap(),
                "{name:?}"
            );
        }
    }
}

fn opt<T: std::fmt::Debug>(s: impl Strategy<Value = T>) -> impl Strategy<Value = Option<T>> {
    prop::option::of(s)
}

prop_compose! {
    fn any_spec()(
        head in (
            opt(prop_oneof![Just(Mode::Linear), Just(Mode::Simulate), Just(Mode::Sweep), Just(Mode::Compare), Just(Mode::Spectrum)]),
            opt(any::<f64>().prop_filter("finite", |v| v.is_finite())),
            opt(-1.0f64..2.0),
            opt(0.1f64..10.0),
            opt(0.1f64..10.0),
            opt(0.0f64..1.0),
            opt(1e-3f64..1.0),
            opt(1e-3f64..1e6),
        ),
        mid in (
            opt(prop_oneof![Just(TopologyKind::Single), Just(TopologyKind::Double)]),
            opt(prop::collection::vec(0usize..10, 0..4)),
            opt(prop_oneof![Just(Combine::Difference), Just(Combine::Sum)]),
            opt(-1.0f64..1.0),
            opt(-3i64..3),
            opt(-1.0f64..1.0),
        ),
        tail in (
            opt(0.0f64..1.0),
            opt(0.0f64..1.0),
            opt(0usize..1000),
            opt(0usize..100_000),
            opt(0usize..100_000),
            opt(-1.0f64..1.0),
            opt(-1.0f64..1.0),
            opt(prop_oneof![Just(Window::Rectangular), Just(Window::Hann)]),
            opt(0usize..1 << 20),
            opt("[a-z/]{1,12}"),
            opt(prop_oneof![Just(Format::Csv), Just(Format::Json)]),
        ),
    ) -> ExperimentSpec {
        let (mode, f0, rho, mass, k, b, ratio, fs) = head;
        let (topology, taps, combine, impulse, polarity, reference) = mid;
        let (grid_start, grid_stop, grid_steps, transient, measure, x0, v0, window, transform_size, out, format) = tail;
        ExperimentSpec {
            mode, f0, rho, mass, k, b, ratio, fs, topology, taps, combine, impulse, polarity,
            reference, grid_start, grid_stop, grid_steps, transient, measure, x0, v0, window,
            transform_size, out: out.map(PathBuf::from), format,
        }
    }
}

proptest! {
    #[test]
    fn spec_round_trips(spec in any_spec()) {
        let parsed = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(parsed, spec);
    }
}
