//! Acceptance criteria as plain functions returning a [`Verdict`].
//!
//! Criteria that produce artifacts take an output directory, so repeated
//! executions can be compared byte for byte.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pdo_cli::execute::{compare_pair, simulate, spectrum_of, sweep_summary, SweepSummary};
use pdo_cli::{execute, CliError, Experiment, ExperimentSpec, Mode, TopologyKind};
use pdo_core::{
    compare_topologies, fold, linear_fd, run, staircase_sweep, Combine, Estimator, FeedbackConfig,
    Pattern, Polarity, ResonatorParams, SimConfig, SimState, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub mod oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {:>2} {status}  {}: {}",
            self.id, self.title, self.detail
        )
    }
}

type Outcome = Result<Verdict, CliError>;

fn spec(mode: Mode, f0: f64, rho: f64) -> ExperimentSpec {
    ExperimentSpec {
        mode: Some(mode),
        f0: Some(f0),
        rho: Some(rho),
        ..Default::default()
    }
}

fn experiment(spec: ExperimentSpec, out: &Path) -> Result<Experiment, CliError> {
    ExperimentSpec {
        out: Some(out.to_path_buf()),
        ..spec
    }
    .validate()
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: dir.join(name),
        source,
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(io::Error::other(e)))?;
    text.push('\n');
    fs::write(dir.join(name), text).map_err(io_err)
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

/// Linear law at zero damping reproduces the folded ratio.
pub fn lossless_identity() -> Verdict {
    let start = Instant::now();
    let max_err = (1..=1000)
        .map(|i| 3.0 * i as f64 / 1000.0)
        .map(|r| (linear_fd(r, 0.0) - fold(r)).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Verdict {
        id: 1,
        title: "lossless identity",
        pass: max_err < 1e-12 && elapsed < Duration::from_secs(1),
        detail: format!(
            "max |linear_fd(r,0) - fold(r)| = {max_err:.3e} (< 1e-12) over 1000 r in (0,3], {}",
            secs(elapsed)
        ),
    }
}

/// Closed-form propagation against an RK4 integration of the ODE.
pub fn propagator_vs_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_err: f64 = 0.0;
    for _ in 0..100 {
        let rho = rng.gen_range(0.0..=0.3);
        let f0 = rng.gen_range(0.05..5.0);
        let state = SimState::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let params = ResonatorParams::new(f0, rho).expect("valid draw");
        let period = 1.0 / f0;
        let exact = params.propagate(state, period).expect("finite");
        let (x, _) = oracle::rk4(&params, state.x, state.v, period, oracle::STEPS_PER_PERIOD);
        max_err = max_err.max((exact.x - x).abs());
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 2,
        title: "propagator vs ODE oracle",
        pass: max_err < 1e-9 && elapsed < Duration::from_secs(10),
        detail: format!(
            "max position error over one period = {max_err:.3e} (< 1e-9), 100 draws, {}",
            secs(elapsed)
        ),
    }
}

fn random_topology(rng: &mut ChaCha8Rng) -> Topology {
    if rng.gen_bool(0.5) {
        Topology::Single {
            taps: rng.gen_range(1..=3),
        }
    } else {
        let taps1 = rng.gen_range(1..=3);
        let taps2 = (taps1 + rng.gen_range(1..=2) - 1) % 3 + 1;
        let combine = if rng.gen_bool(0.5) {
            Combine::Difference
        } else {
            Combine::Sum
        };
        Topology::double_with(taps1, taps2, combine).expect("distinct taps")
    }
}

/// Energy bookkeeping closes over random closed-loop runs.
pub fn energy_ledger() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let params = ResonatorParams::new(rng.gen_range(0.1..10.0), rng.gen_range(0.0..0.3))?;
        let mut feedback = FeedbackConfig::new(random_topology(&mut rng), rng.gen_range(1e-3..1.0));
        if rng.gen_bool(0.25) {
            feedback = feedback.with_polarity(Polarity::Positive);
        }
        let config = SimConfig::new(params, rng.gen_range(0.05..1.5), feedback)
            .with_samples(2_000, 8_000)
            .with_initial_state(SimState::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
        let ledger = run(&config)?.ledger;
        worst = worst.max(ledger.residual().abs() / ledger.final_energy.abs().max(1.0));
    }
    let elapsed = start.elapsed();
    Ok(Verdict {
        id: 3,
        title: "energy ledger",
        pass: worst < 1e-9 && elapsed < Duration::from_secs(30),
        detail: format!(
            "max |residual| / max(1, final) = {worst:.3e} (< 1e-9) over 50 runs of 1e4 samples, {}",
            secs(elapsed)
        ),
    })
}

#[derive(Serialize)]
struct PatternArtifact {
    pattern: Option<Pattern>,
    exact_over_window: bool,
}

/// Single feedback at `fS = 4 f0` settles to the square wave `1100`.
pub fn single_bit_pattern(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        ratio: Some(0.25),
        transient: Some(2048),
        ..spec(Mode::Simulate, 1.0, 1e-3)
    };
    let exp = experiment(spec, &out.join("c4"))?;
    execute(&exp)?;
    let trace = run(&exp.config)?;
    let pattern = Pattern::find_exact(trace.bits.bits(), 64);
    let pass = pattern
        .as_ref()
        .is_some_and(|p| p.period == 4 && p.is_rotation_of("1100"));
    write_json(
        &out.join("c4"),
        "criterion.json",
        &PatternArtifact {
            exact_over_window: pattern.is_some(),
            pattern: pattern.clone(),
        },
    )?;
    Ok(Verdict {
        id: 4,
        title: "single-feedback bit pattern",
        pass,
        detail: format!(
            "whole measured window periodic with {} (want rotation of 1100, period 4)",
            pattern.map_or_else(|| "no period".into(), |p| p.to_string())
        ),
    })
}

/// Double feedback at the same point cycles through pulse levels `2101`.
pub fn double_pulse_pattern(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        ratio: Some(0.25),
        transient: Some(2048),
        topology: Some(TopologyKind::Double),
        taps: Some(vec![1, 2]),
        ..spec(Mode::Simulate, 1.0, 1e-3)
    };
    let exp = experiment(spec, &out.join("c5"))?;
    execute(&exp)?;
    let (_, summary) = simulate(&exp.config)?;
    let pattern = summary.level_pattern;
    let trace = run(&exp.config)?;
    let exact = Pattern::find_exact(&trace.pulse_levels, 64).is_some();
    let pass = pattern
        .as_ref()
        .is_some_and(|p| p.period == 4 && p.is_rotation_of("2101"));
    write_json(
        &out.join("c5"),
        "criterion.json",
        &PatternArtifact {
            pattern: pattern.clone(),
            exact_over_window: exact,
        },
    )?;
    Ok(Verdict {
        id: 5,
        title: "double-feedback pulse pattern",
        pass,
        detail: format!(
            "settled pulse-level cycle {} (want rotation of 2101), exact over whole window: {exact}",
            pattern.map_or_else(|| "none".into(), |p| p.to_string())
        ),
    })
}

pub const PEAK_TARGET_HZ: f64 = 93_680.0;

/// Spectrum of the bitstream peaks at the oscillation frequency in Hz.
pub fn spectral_peak(out: &Path) -> Outcome {
    let f0 = 93_688.0;
    let spec = ExperimentSpec {
        fs: Some(4.0 * f0),
        impulse: Some(1.0),
        ..spec(Mode::Spectrum, f0, 1e-3)
    };
    let exp = experiment(spec, &out.join("c6"))?;
    execute(&exp)?;
    let (_, summary) = spectrum_of(&exp.config, exp.window, exp.transform_size)?;
    let err = (summary.peak_frequency_hz - PEAK_TARGET_HZ).abs();
    Ok(Verdict {
        id: 6,
        title: "spectral peak",
        pass: err < 50.0,
        detail: format!(
            "peak at {:.3} Hz, |peak - 93680 Hz| = {err:.3} Hz (< 50 Hz)",
            summary.peak_frequency_hz
        ),
    })
}

#[derive(Serialize)]
struct ComparisonArtifact {
    single_mean: Option<f64>,
    double_mean: Option<f64>,
}

/// Double feedback tracks the natural frequency better near Nyquist.
pub fn near_nyquist_comparison(out: &Path) -> Outcome {
    let start = Instant::now();
    let spec = ExperimentSpec {
        grid_start: Some(0.40),
        grid_stop: Some(0.48),
        grid_steps: Some(33),
        ..spec(Mode::Compare, 1.0, 0.05)
    };
    let exp = experiment(spec, &out.join("c7"))?;
    execute(&exp)?;
    let (single, double) = compare_pair(&exp.config)?;
    let cmp = compare_topologies(&exp.grid, &exp.config, single, double)?;
    let elapsed = start.elapsed();
    let (s, d) = (
        cmp.single_summary.mean_deviation,
        cmp.double_summary.mean_deviation,
    );
    write_json(
        &out.join("c7"),
        "criterion.json",
        &ComparisonArtifact {
            single_mean: s,
            double_mean: d,
        },
    )?;
    let missing = cmp.single_summary.missing + cmp.double_summary.missing;
    let (pass, detail) = match (s, d) {
        (Some(s), Some(d)) => (
            d < s && d < 0.01 && missing == 0 && elapsed < Duration::from_secs(120),
            format!(
                "mean |fd - fold(r)|: single {s:.5}, double {d:.5}; double < single: {}, double < 0.01: {}; {missing} missing; {}",
                d < s,
                d < 0.01,
                secs(elapsed)
            ),
        ),
        _ => (false, format!("no measured points ({missing} missing)")),
    };
    Ok(Verdict {
        id: 7,
        title: "near-Nyquist comparison",
        pass,
        detail,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRun {
    pub impulse: f64,
    pub amplitude: f64,
    pub injected: f64,
    pub actuation_effort: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyComparison {
    pub single: EnergyRun,
    pub double: EnergyRun,
    pub amplitude_mismatch: f64,
}

/// Runs both topologies at `ratio` with the double's impulse rescaled so
/// the steady amplitudes match. The dynamics are linear in the impulse, so
/// one rescale suffices.
pub fn matched_energy(ratio: f64, rho: f64, impulse: f64) -> Result<EnergyComparison, CliError> {
    let params = ResonatorParams::new(1.0, rho)?;
    let measure = |topology: Topology, impulse: f64| -> Result<EnergyRun, CliError> {
        let config = SimConfig::new(params, ratio, FeedbackConfig::new(topology, impulse));
        let trace = run(&config)?;
        Ok(EnergyRun {
            impulse,
            amplitude: trace.steady_amplitude,
            injected: trace.steady.injected_total,
            actuation_effort: trace.steady.actuation_effort,
        })
    };
    let single = measure(Topology::single(1)?, impulse)?;
    let probe = measure(Topology::double(1, 2)?, impulse)?;
    let double = measure(
        Topology::double(1, 2)?,
        impulse * single.amplitude / probe.amplitude,
    )?;
    Ok(EnergyComparison {
        amplitude_mismatch: (double.amplitude - single.amplitude).abs() / single.amplitude,
        single,
        double,
    })
}

/// Double feedback injects more energy than single at matched amplitude.
pub fn energy_ordering(out: &Path) -> Outcome {
    let cmp = matched_energy(0.25, 1e-3, 0.01)?;
    write_json(&out.join("c8"), "criterion.json", &cmp)?;
    let matched = cmp.amplitude_mismatch < 0.05;
    let ordered = cmp.double.injected > cmp.single.injected;
    Ok(Verdict {
        id: 8,
        title: "energy efficiency ordering",
        pass: matched && ordered,
        detail: format!(
            "amplitudes {:.4e} vs {:.4e} (mismatch {:.2}%, < 5%); injected single {:.4e}, double {:.4e}; double > single: {ordered} (actuation effort single {:.4e}, double {:.4e})",
            cmp.single.amplitude,
            cmp.double.amplitude,
            100.0 * cmp.amplitude_mismatch,
            cmp.single.injected,
            cmp.double.injected,
            cmp.single.actuation_effort,
            cmp.double.actuation_effort,
        ),
    })
}

fn run_sweep(exp: &Experiment) -> Result<SweepSummary, CliError> {
    let sweep = staircase_sweep(&exp.grid, &exp.config, Estimator::Transitions)?;
    Ok(sweep_summary(sweep))
}

/// Without losses the loop oscillates at the folded natural frequency.
pub fn lossless_sweep(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        grid_start: Some(0.05),
        grid_stop: Some(0.45),
        grid_steps: Some(9),
        ..spec(Mode::Sweep, 1.0, 0.0)
    };
    let exp = experiment(spec, &out.join("c9"))?;
    execute(&exp)?;
    let summary = run_sweep(&exp)?;
    let tol = 2.0 / exp.config.measure_samples as f64;
    let worst = summary
        .sweep
        .measured()
        .map(|(p, m)| (m.fd_est - p.r).abs())
        .fold(0.0, f64::max);
    Ok(Verdict {
        id: 9,
        title: "lossless sweep",
        pass: summary.missing == 0 && worst < tol,
        detail: format!(
            "max |fd_est - r| = {worst:.3e} (< {tol:.3e}) over 9 ratios, {} missing",
            summary.missing
        ),
    })
}

/// A dense grid shows the locked plateaus of a devil's staircase.
pub fn staircase_plateaus(out: &Path) -> Outcome {
    let spec = ExperimentSpec {
        grid_start: Some(0.05),
        grid_stop: Some(0.45),
        grid_steps: Some(400),
        ..spec(Mode::Sweep, 1.0, 0.05)
    };
    let exp = experiment(spec, &out.join("c10"))?;
    execute(&exp)?;
    let summary = run_sweep(&exp)?;
    let shown: Vec<String> = summary
        .plateaus
        .iter()
        .take(6)
        .map(|p| format!("{}/{}x{}", p.lock.numerator, p.lock.denominator, p.len))
        .collect();
    Ok(Verdict {
        id: 10,
        title: "staircase plateaus",
        pass: summary.plateaus.len() >= 5,
        detail: format!(
            "{} plateaus of >= 3 identical rational locks (>= 5), e.g. {}",
            summary.plateaus.len(),
            shown.join(" ")
        ),
    })
}

/// Every artifact-producing criterion, in order.
pub fn artifact_criteria() -> [fn(&Path) -> Outcome; 7] {
    [
        single_bit_pattern,
        double_pulse_pattern,
        spectral_peak,
        near_nyquist_comparison,
        energy_ordering,
        lossless_sweep,
        staircase_plateaus,
    ]
}

fn files_under(root: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs criteria 4 to 10 into `first` and `second` and compares every
/// output file byte for byte.
pub fn determinism(first: &Path, second: &Path) -> Outcome {
    for dir in [first, second] {
        for criterion in artifact_criteria() {
            criterion(dir)?;
        }
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    let names = files_under(first).map_err(io_err(first))?;
    let other = files_under(second).map_err(io_err(second))?;
    let mut differing = Vec::new();
    for name in &names {
        let a = fs::read(first.join(name)).map_err(io_err(&first.join(name)))?;
        let b = fs::read(second.join(name)).ok();
        if b.as_deref() != Some(a.as_slice()) {
            differing.push(name.display().to_string());
        }
    }
    Ok(Verdict {
        id: 11,
        title: "determinism",
        pass: names == other && differing.is_empty() && !names.is_empty(),
        detail: format!(
            "{} files from criteria 4-10 compared across two executions, {} differ{}",
            names.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(": {}", differing.join(", "))
            }
        ),
    })
}
