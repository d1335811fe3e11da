//! Experiment files: a flat JSON object whose keys mirror the CLI flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pdo_core::{
    Combine, FeedbackConfig, Polarity, ResonatorParams, SimConfig, SimState, Topology, Window,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_IMPULSE: f64 = 0.01;
pub const DEFAULT_OUT: &str = "pdo-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Linear-model frequency over a grid of sampling ratios.
    Linear,
    /// One closed-loop run with its trace and summary.
    Simulate,
    /// Staircase sweep of the closed loop over a grid.
    Sweep,
    /// Single against double feedback over the same grid.
    Compare,
    /// Magnitude spectrum of one run's bitstream.
    Spectrum,
}

impl Mode {
    fn uses_grid(self) -> bool {
        matches!(self, Mode::Linear | Mode::Sweep | Mode::Compare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Unvalidated experiment description. Every key is optional here;
/// [`ExperimentSpec::validate`] enforces presence, ranges and exclusivity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combine: Option<Combine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// A validated experiment, ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub mode: Mode,
    /// Base loop configuration. Grid modes override `ratio` per point.
    pub config: SimConfig,
    pub grid: Vec<f64>,
    pub window: Window,
    pub transform_size: Option<usize>,
    pub out: PathBuf,
    pub format: Format,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Spec {
        key: key.to_string(),
        message: message.into(),
    }
}

fn positive(key: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {value}")))
    }
}

fn finite(key: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(key, format!("must be finite, got {value}")))
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// Parses `START:STOP:STEPS`.
pub fn parse_grid(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        return Err(format!("expected START:STOP:STEPS, got `{text}`"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let steps = steps
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("`{steps}`: {e}"))?;
    Ok((num(start)?, num(stop)?, steps))
}

/// Parses `a` or `a,b`.
pub fn parse_taps(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec fields always serialize")
    }

    /// Layers `other` on top of `self`: every key set in `other` wins.
    /// Setting either of `ratio`/`fs` clears the other, and setting either
    /// resonator description clears the other.
    pub fn overlay(mut self, other: ExperimentSpec) -> Self {
        if other.ratio.is_some() || other.fs.is_some() {
            self.ratio = None;
            self.fs = None;
        }
        let physical = other.mass.is_some() || other.k.is_some() || other.b.is_some();
        let modal = other.f0.is_some() || other.rho.is_some();
        if physical && !modal {
            self.f0 = None;
            self.rho = None;
        }
        if modal && !physical {
            self.mass = None;
            self.k = None;
            self.b = None;
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            mode,
            f0,
            rho,
            mass,
            k,
            b,
            ratio,
            fs,
            topology,
            taps,
            combine,
            impulse,
            polarity,
            reference,
            grid_start,
            grid_stop,
            grid_steps,
            transient,
            measure,
            x0,
            v0,
            window,
            transform_size,
            out,
            format
        );
        self
    }

    fn resonator(&self) -> Result<ResonatorParams, CliError> {
        let physical = [("mass", self.mass), ("k", self.k), ("b", self.b)];
        if physical.iter().any(|(_, v)| v.is_some()) {
            if self.f0.is_some() || self.rho.is_some() {
                let key = if self.f0.is_some() { "f0" } else { "rho" };
                return Err(invalid(
                    key,
                    "give either f0 and rho, or mass, k and b, not both",
                ));
            }
            let mut values = [0.0; 3];
            for (slot, (key, value)) in values.iter_mut().zip(physical) {
                *slot = value.ok_or_else(|| invalid(key, "required with mass, k and b"))?;
            }
            let [mass, k, b] = values;
            positive("mass", mass)?;
            positive("k", k)?;
            if !(b.is_finite() && b >= 0.0) {
                return Err(invalid("b", format!("must be finite and >= 0, got {b}")));
            }
            return ResonatorParams::from_physical(mass, k, b)
                .map_err(|e| invalid("b", e.to_string()));
        }

        let f0 = positive("f0", self.f0.ok_or_else(|| invalid("f0", "required"))?)?;
        let rho = self.rho.ok_or_else(|| invalid("rho", "required"))?;
        if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
            return Err(invalid(
                "rho",
                format!("must satisfy 0 <= rho < 1, got {rho}"),
            ));
        }
        ResonatorParams::new(f0, rho).map_err(|e| invalid("rho", e.to_string()))
    }

    fn topology(&self) -> Result<Topology, CliError> {
        let kind = self.topology.unwrap_or(TopologyKind::Single);
        let taps = self.taps.clone();
        let topology = match kind {
            TopologyKind::Single => {
                if self.combine.is_some() {
                    return Err(invalid("combine", "only applies to double feedback"));
                }
                match taps.as_deref() {
                    None => Topology::single(1),
                    Some(&[m]) => Topology::single(m),
                    Some(other) => {
                        return Err(invalid(
                            "taps",
                            format!("single feedback takes one tap, got {}", other.len()),
                        ))
                    }
                }
            }
            TopologyKind::Double => {
                let combine = self.combine.unwrap_or_default();
                match taps.as_deref() {
                    None => Topology::double_with(1, 2, combine),
                    Some(&[m1, m2]) => Topology::double_with(m1, m2, combine),
                    Some(other) => {
                        return Err(invalid(
                            "taps",
                            format!("double feedback takes two taps, got {}", other.len()),
                        ))
                    }
                }
            }
        };
        topology.map_err(|e| invalid("taps", e.to_string()))
    }

    fn grid(&self, mode: Mode) -> Result<Vec<f64>, CliError> {
        if !mode.uses_grid() {
            return Ok(Vec::new());
        }
        let start = self
            .grid_start
            .ok_or_else(|| invalid("grid_start", "required"))?;
        let stop = self
            .grid_stop
            .ok_or_else(|| invalid("grid_stop", "required"))?;
        let steps = self
            .grid_steps
            .ok_or_else(|| invalid("grid_steps", "required"))?;
        positive("grid_start", start)?;
        positive("grid_stop", stop)?;
        if steps == 0 {
            return Err(invalid("grid_steps", "must be >= 1"));
        }
        if stop < start {
            return Err(invalid(
                "grid_stop",
                format!("must be >= grid_start ({start}), got {stop}"),
            ));
        }
        Ok(linspace(start, stop, steps))
    }

    /// Checks every key and resolves defaults.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let mode = self.mode.ok_or_else(|| invalid("mode", "required"))?;
        let resonator = self.resonator()?;

        let ratio = match (self.ratio, self.fs) {
            (Some(_), Some(_)) => {
                return Err(invalid("ratio", "ratio and fs are mutually exclusive"))
            }
            (Some(r), None) => Some(positive("ratio", r)?),
            (None, Some(fs)) => Some(resonator.f0() / positive("fs", fs)?),
            (None, None) if mode.uses_grid() => None,
            (None, None) => return Err(invalid("ratio", "one of ratio or fs is required")),
        };
        let grid = self.grid(mode)?;

        let impulse = self.impulse.unwrap_or(DEFAULT_IMPULSE);
        if !(impulse.is_finite() && impulse >= 0.0) {
            return Err(invalid(
                "impulse",
                format!("must be finite and >= 0, got {impulse}"),
            ));
        }
        let polarity = match self.polarity {
            None => Polarity::default(),
            Some(sign) => {
                Polarity::from_sign(sign).map_err(|e| invalid("polarity", e.to_string()))?
            }
        };
        let mut feedback = FeedbackConfig::new(self.topology()?, impulse).with_polarity(polarity);
        feedback.reference = finite("reference", self.reference.unwrap_or(0.0))?;

        let mut config = SimConfig::new(
            resonator,
            ratio.unwrap_or(grid.first().copied().unwrap_or(1.0)),
            feedback,
        );
        let transient = self.transient.unwrap_or(config.transient_samples);
        let measure = self.measure.unwrap_or(config.measure_samples);
        if measure < 2 {
            return Err(invalid("measure", format!("must be >= 2, got {measure}")));
        }
        config = config.with_samples(transient, measure);
        let x0 = finite("x0", self.x0.unwrap_or(config.initial_state.x))?;
        let v0 = finite("v0", self.v0.unwrap_or(0.0))?;
        config = config.with_initial_state(SimState::new(x0, v0));

        if let Some(size) = self.transform_size {
            if !size.is_power_of_two() || size < measure {
                return Err(invalid(
                    "transform_size",
                    format!("must be a power of two >= measure ({measure}), got {size}"),
                ));
            }
        }

        Ok(Experiment {
            mode,
            config,
            grid,
            window: self.window.unwrap_or_default(),
            transform_size: self.transform_size,
            out: self
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            format: self.format.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ExperimentSpec {
        ExperimentSpec::from_json(r#"{"mode":"simulate","f0":1,"rho":0.001,"ratio":0.25}"#).unwrap()
    }

    fn key_of(err: CliError) -> String {
        match err {
            CliError::Spec { key, .. } => key,
            other => panic!("expected a spec error, got {other}"),
        }
    }

    #[test]
    fn minimal_spec_validates() {
        let exp = minimal().validate().unwrap();
        assert_eq!(exp.mode, Mode::Simulate);
        assert_eq!(exp.config.ratio, 0.25);
        assert_eq!(exp.config.feedback.topology, Topology::Single { taps: 1 });
        assert_eq!(exp.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn overdamped_rho_names_key() {
        let spec = ExperimentSpec {
            rho: Some(1.2),
            ..minimal()
        };
        assert_eq!(key_of(spec.validate().unwrap_err()), "rho");
    }

    #[test]
    fn ratio_and_fs_conflict() {
        let spec = ExperimentSpec {
            fs: Some(4.0),
            ..minimal()
        };
        let err = spec.validate().unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
    }

    #[test]
    fn fs_sets_ratio() {
        let spec = ExperimentSpec {
            ratio: None,
            fs: Some(4.0),
            ..minimal()
        };
        assert_eq!(spec.validate().unwrap().config.ratio, 0.25);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentSpec::from_json(r#"{"mode":"linear","bogus":1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn physical_parameters() {
        let spec =
            ExperimentSpec::from_json(r#"{"mode":"simulate","mass":1,"k":1,"b":0.1,"ratio":0.25}"#)
                .unwrap();
        let exp = spec.validate().unwrap();
        assert!((exp.config.resonator.rho() - 0.05).abs() < 1e-15);
        let mixed = ExperimentSpec {
            f0: Some(1.0),
            ..spec.clone()
        };
        assert_eq!(key_of(mixed.validate().unwrap_err()), "f0");
        let partial = ExperimentSpec { b: None, ..spec };
        assert_eq!(key_of(partial.validate().unwrap_err()), "b");
    }

    #[test]
    fn field_errors_name_their_key() {
        let cases: Vec<(ExperimentSpec, &str)> = vec![
            (
                ExperimentSpec {
                    f0: Some(-1.0),
                    ..minimal()
                },
                "f0",
            ),
            (
                ExperimentSpec {
                    ratio: Some(0.0),
                    ..minimal()
                },
                "ratio",
            ),
            (
                ExperimentSpec {
                    taps: Some(vec![1, 2]),
                    ..minimal()
                },
                "taps",
            ),
            (
                ExperimentSpec {
                    topology: Some(TopologyKind::Double),
                    taps: Some(vec![2, 2]),
                    ..minimal()
                },
                "taps",
            ),
            (
                ExperimentSpec {
                    combine: Some(Combine::Sum),
                    ..minimal()
                },
                "combine",
            ),
            (
                ExperimentSpec {
                    impulse: Some(-0.1),
                    ..minimal()
                },
                "impulse",
            ),
            (
                ExperimentSpec {
                    polarity: Some(0),
                    ..minimal()
                },
                "polarity",
            ),
            (
                ExperimentSpec {
                    measure: Some(1),
                    ..minimal()
                },
                "measure",
            ),
            (
                ExperimentSpec {
                    transform_size: Some(1000),
                    ..minimal()
                },
                "transform_size",
            ),
            (
                ExperimentSpec {
                    mode: Some(Mode::Sweep),
                    ..minimal()
                },
                "grid_start",
            ),
            (
                ExperimentSpec {
                    mode: None,
                    ..minimal()
                },
                "mode",
            ),
        ];
        for (spec, key) in cases {
            assert_eq!(key_of(spec.validate().unwrap_err()), key);
        }
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(linspace(0.1, 0.5, 5).last(), Some(&0.5));
        assert_eq!(linspace(0.3, 0.3, 1), vec![0.3]);
        assert_eq!(parse_grid("0.1:0.5:9").unwrap(), (0.1, 0.5, 9));
        assert!(parse_grid("0.1:0.5").is_err());
        assert_eq!(parse_taps("1,2").unwrap(), vec![1, 2]);
    }

    #[test]
    fn overlay_precedence() {
        let file = minimal();
        let flags = ExperimentSpec {
            fs: Some(8.0),
            impulse: Some(0.5),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.ratio, None);
        assert_eq!(merged.fs, Some(8.0));
        assert_eq!(merged.impulse, Some(0.5));
        assert_eq!(merged.validate().unwrap().config.ratio, 0.125);
    }
}
