//! Runs a validated experiment and writes its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pdo_core::{
    compare_topologies, default_transform_size, detect_period, estimate_fd_spectral,
    estimate_fd_transitions, linear_fd, run, spectrum, staircase_sweep, unfold_frequency,
    EnergyLedger, Estimator, Pattern, Plateau, SimConfig, SweepResult, Topology, TopologySummary,
    Unfolded, Window,
};
use serde::Serialize;

use crate::spec::{Experiment, Format, Mode};
use crate::CliError;

/// Longest bit or pulse-level cycle reported in a simulation summary.
pub const PATTERN_MAX_PERIOD: usize = 256;
/// Shortest run of identical locks reported as a plateau.
pub const PLATEAU_MIN_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRow {
    pub r: f64,
    pub fd_linear: f64,
    /// `fd_linear · fS`
    pub fd_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: f64,
    pub v: f64,
    pub bit: u8,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub fd_est: f64,
    pub fd_linear: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub freq_norm: f64,
    pub freq_hz: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub config: SimConfig,
    pub sample_rate_hz: f64,
    pub fd_linear: f64,
    pub fd_transitions: f64,
    pub fd_spectral: f64,
    /// Physical frequency (Hz) the transition estimate unfolds to, nearest
    /// to `f0`.
    pub f_osc_hz: f64,
    pub bit_pattern: Option<Pattern>,
    pub level_pattern: Option<Pattern>,
    pub ledger: EnergyLedger,
    pub steady: EnergyLedger,
    pub steady_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mean_natural_deviation: Option<f64>,
    pub max_natural_deviation: Option<f64>,
    pub missing: usize,
    pub plateaus: Vec<Plateau>,
    pub sweep: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub single: TopologySummary,
    pub double: TopologySummary,
    pub double_is_closer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub window: Window,
    pub transform_size: usize,
    pub sample_rate_hz: f64,
    pub peak_frequency: f64,
    pub peak_frequency_hz: f64,
    pub peak_magnitude: f64,
    pub unfolded: Unfolded,
}

/// What an execution wrote, plus a one-line human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub headline: String,
}

struct Sink<'a> {
    dir: &'a Path,
    format: Format,
    files: Vec<PathBuf>,
}

impl Sink<'_> {
    fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let path = self.dir.join(format!("{stem}.csv"));
                let csv_err = |source| CliError::Csv {
                    path: path.clone(),
                    source,
                };
                let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
                for row in rows {
                    w.serialize(row).map_err(csv_err)?;
                }
                w.flush().map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                self.files.push(path);
                Ok(())
            }
            Format::Json => self.json(&format!("{stem}.json"), &rows),
        }
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io_err = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        serde_json::to_writer_pretty(&mut w, value)
            .map_err(|e| io_err(std::io::Error::other(e)))?;
        w.write_all(b"\n")
            .and_then(|()| w.flush())
            .map_err(io_err)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn linear_rows(exp: &Experiment) -> Vec<LinearRow> {
    let rho = exp.config.resonator.rho();
    let f0 = exp.config.resonator.f0();
    exp.grid
        .iter()
        .map(|&r| {
            let fd = linear_fd(r, rho);
            LinearRow {
                r,
                fd_linear: fd,
                fd_hz: fd * f0 / r,
            }
        })
        .collect()
}

pub fn simulate(config: &SimConfig) -> Result<(Vec<TraceRow>, SimulationSummary), CliError> {
    let trace = run(config)?;
    let rows = (0..trace.len())
        .map(|i| TraceRow {
            n: config.transient_samples + i,
            x: trace.positions[i],
            v: trace.velocities[i],
            bit: trace.bits.bits()[i],
            level: trace.pulse_levels[i],
        })
        .collect();
    let fd_transitions = estimate_fd_transitions(&trace.bits)?;
    let fs = config.sample_rate();
    let summary = SimulationSummary {
        config: *config,
        sample_rate_hz: fs,
        fd_linear: linear_fd(config.ratio, config.resonator.rho()),
        fd_transitions,
        fd_spectral: estimate_fd_spectral(&trace.bits)?,
        f_osc_hz: unfold_frequency(fd_transitions, fs, config.resonator.f0())?.best,
        bit_pattern: detect_period(&trace.bits, PATTERN_MAX_PERIOD),
        level_pattern: Pattern::find(&trace.pulse_levels, PATTERN_MAX_PERIOD),
        ledger: trace.ledger,
        steady: trace.steady,
        steady_amplitude: trace.steady_amplitude,
    };
    Ok((rows, summary))
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<SweepRow> {
    sweep
        .measured()
        .map(|(p, m)| SweepRow {
            r: p.r,
            fd_est: m.fd_est,
            fd_linear: p.fd_linear,
            deviation: m.deviation,
        })
        .collect()
}

pub fn sweep_summary(sweep: SweepResult) -> SweepSummary {
    SweepSummary {
        mean_natural_deviation: sweep.mean_natural_deviation(),
        max_natural_deviation: sweep.max_natural_deviation(),
        missing: sweep.missing(),
        plateaus: sweep.plateaus(PLATEAU_MIN_LEN),
        sweep,
    }
}

/// Topologies compared in `compare` mode: `Single{1}` against the
/// configured double topology, or `Double{1, 2}` when the spec is single.
pub fn compare_pair(config: &SimConfig) -> Result<(Topology, Topology), CliError> {
    let double = match config.feedback.topology {
        t @ Topology::Double { .. } => t,
        Topology::Single { .. } => Topology::double(1, 2)?,
    };
    Ok((Topology::single(1)?, double))
}

pub fn spectrum_of(
    config: &SimConfig,
    window: Window,
    transform_size: Option<usize>,
) -> Result<(Vec<SpectrumRow>, SpectrumSummary), CliError> {
    let trace = run(config)?;
    let size = transform_size.unwrap_or_else(|| default_transform_size(trace.bits.len()));
    let s = spectrum(&trace.bits, window, size)?;
    let rows = s
        .freq_norm
        .iter()
        .zip(s.freq_hz())
        .zip(&s.magnitudes)
        .map(|((&freq_norm, freq_hz), &magnitude)| SpectrumRow {
            freq_norm,
            freq_hz,
            magnitude,
        })
        .collect();
    let summary = SpectrumSummary {
        window,
        transform_size: size,
        sample_rate_hz: s.sample_rate,
        peak_frequency: s.peak_frequency,
        peak_frequency_hz: s.peak_frequency_hz(),
        peak_magnitude: s.peak_magnitude,
        unfolded: unfold_frequency(s.peak_frequency, s.sample_rate, config.resonator.f0())?,
    };
    Ok((rows, summary))
}

/// Runs `exp` and writes its artifacts into `exp.out`, creating it if
/// needed. Output is a pure function of the experiment.
pub fn execute(exp: &Experiment) -> Result<Report, CliError> {
    fs::create_dir_all(&exp.out).map_err(|source| CliError::Io {
        path: exp.out.clone(),
        source,
    })?;
    let mut sink = Sink {
        dir: &exp.out,
        format: exp.format,
        files: Vec::new(),
    };

    let headline = match exp.mode {
        Mode::Linear => {
            let rows = linear_rows(exp);
            sink.table("linear", &rows)?;
            format!("linear: {} points", rows.len())
        }
        Mode::Simulate => {
            let (rows, summary) = simulate(&exp.config)?;
            sink.table("trace", &rows)?;
            sink.json("summary.json", &summary)?;
            let pattern = summary
                .bit_pattern
                .as_ref()
                .map_or_else(|| "none".to_string(), ToString::to_string);
            format!(
                "simulate: fd = {:.6} (linear {:.6}), f_osc = {:.6} Hz, pattern {pattern}",
                summary.fd_transitions, summary.fd_linear, summary.f_osc_hz
            )
        }
        Mode::Sweep => {
            let sweep = staircase_sweep(&exp.grid, &exp.config, Estimator::Transitions)?;
            sink.table("sweep", &sweep_rows(&sweep))?;
            let summary = sweep_summary(sweep);
            sink.json("sweep-summary.json", &summary)?;
            format!(
                "sweep: {} points, {} missing, {} plateaus",
                summary.sweep.points.len(),
                summary.missing,
                summary.plateaus.len()
            )
        }
        Mode::Compare => {
            let (single, double) = compare_pair(&exp.config)?;
            let cmp = compare_topologies(&exp.grid, &exp.config, single, double)?;
            sink.table("compare-single", &sweep_rows(&cmp.single))?;
            sink.table("compare-double", &sweep_rows(&cmp.double))?;
            let summary = CompareSummary {
                double_is_closer: cmp.double_is_closer(),
                single: cmp.single_summary,
                double: cmp.double_summary,
            };
            sink.json("compare-summary.json", &summary)?;
            let show = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"));
            format!(
                "compare: mean |fd - fold(r)| single {} double {}",
                show(summary.single.mean_deviation),
                show(summary.double.mean_deviation)
            )
        }
        Mode::Spectrum => {
            let (rows, summary) = spectrum_of(&exp.config, exp.window, exp.transform_size)?;
            sink.table("spectrum", &rows)?;
            sink.json("spectrum-summary.json", &summary)?;
            format!(
                "spectrum: peak {:.6} cycles/sample = {:.3} Hz, unfolds to {:.3} Hz",
                summary.peak_frequency, summary.peak_frequency_hz, summary.unfolded.best
            )
        }
    };

    Ok(Report {
        files: sink.files,
        headline,
    })
}
