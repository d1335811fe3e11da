use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pdo_cli::spec::{parse_grid, parse_taps};
use pdo_cli::{execute, CliError, ExperimentSpec, Format, Mode, TopologyKind};
use pdo_core::{Combine, Window};

/// Simulate and analyse pulsed digital oscillators.
///
/// Flags override values from `--spec`. Exit status: 0 on success, 2 for an
/// invalid experiment, 1 for a failure while running or writing output.
#[derive(Debug, Parser)]
#[command(name = "pdo", version)]
struct Args {
    mode: Mode,
    /// JSON experiment file with the same keys as the flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Natural frequency in Hz.
    #[arg(long)]
    f0: Option<f64>,
    /// Damping ratio, `0 <= rho < 1`.
    #[arg(long)]
    rho: Option<f64>,
    /// Physical mass; use with --k and --b instead of --f0/--rho.
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Sampling ratio f0/fS.
    #[arg(long, conflicts_with = "fs")]
    ratio: Option<f64>,
    /// Sampling frequency in Hz.
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long, value_enum)]
    topology: Option<TopologyKind>,
    /// Delay taps, `m` or `m1,m2`.
    #[arg(long, value_parser = parse_taps)]
    taps: Option<Vec<usize>>,
    /// Double-feedback level rule.
    #[arg(long, value_parser = parse_combine)]
    combine: Option<Combine>,
    /// Momentum per unit pulse level.
    #[arg(long)]
    impulse: Option<f64>,
    /// Actuator sign, 1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    polarity: Option<i64>,
    /// Quantizer threshold.
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<f64>,
    /// Ratio grid `START:STOP:STEPS`, endpoints included.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(f64, f64, usize)>,
    #[arg(long)]
    transient: Option<usize>,
    #[arg(long)]
    measure: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[arg(long, value_parser = parse_window)]
    window: Option<Window>,
    #[arg(long)]
    transform_size: Option<usize>,
    /// Output directory (default `pdo-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_combine(s: &str) -> Result<Combine, String> {
    match s {
        "difference" => Ok(Combine::Difference),
        "sum" => Ok(Combine::Sum),
        other => Err(format!("expected `difference` or `sum`, got `{other}`")),
    }
}

fn parse_window(s: &str) -> Result<Window, String> {
    match s {
        "rectangular" => Ok(Window::Rectangular),
        "hann" => Ok(Window::Hann),
        other => Err(format!("expected `rectangular` or `hann`, got `{other}`")),
    }
}

impl Args {
    fn flags(self) -> ExperimentSpec {
        let (grid_start, grid_stop, grid_steps) = match self.grid {
            Some((a, b, n)) => (Some(a), Some(b), Some(n)),
            None => (None, None, None),
        };
        ExperimentSpec {
            mode: Some(self.mode),
            f0: self.f0,
            rho: self.rho,
            mass: self.mass,
            k: self.k,
            b: self.b,
            ratio: self.ratio,
            fs: self.fs,
            topology: self.topology,
            taps: self.taps,
            combine: self.combine,
            impulse: self.impulse,
            polarity: self.polarity,
            reference: self.reference,
            grid_start,
            grid_stop,
            grid_steps,
            transient: self.transient,
            measure: self.measure,
            x0: self.x0,
            v0: self.v0,
            window: self.window,
            transform_size: self.transform_size,
            out: self.out,
            format: self.format,
        }
    }
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let base = match &args.spec {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec::default(),
    };
    let experiment = base.overlay(args.flags()).validate()?;
    let report = execute(&experiment)?;
    println!("{}", report.headline);
    for file in &report.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
