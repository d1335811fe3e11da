use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use super::{estimate_fd_spectral, estimate_fd_transitions, fold, linear_fd};
use crate::feedback::Topology;
use crate::sim::{run, Pattern, SimConfig};
use crate::{Error, Result};

/// Longest period accepted as a frequency lock.
pub const LOCK_MAX_PERIOD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Transitions,
    Spectrum,
}

/// An exactly periodic bitstream: the loop is locked on the rational
/// frequency `numerator / denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Lock {
    pub period: usize,
    pub numerator: usize,
    pub denominator: usize,
}

impl Lock {
    fn from_pattern(p: &Pattern) -> Self {
        // A cyclic binary word has an even number of transitions.
        let half_transitions = p.transitions() / 2;
        let g = half_transitions.gcd(&p.period);
        Self {
            period: p.period,
            numerator: half_transitions / g,
            denominator: p.period / g,
        }
    }

    pub fn fd(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// What a successful run at one grid point produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub fd_est: f64,
    /// The other estimator's reading.
    pub fd_crosscheck: f64,
    /// `|fd_est − fd_linear|`
    pub deviation: f64,
    /// `|fd_est − fold(r)|`
    pub natural_deviation: f64,
    pub lock: Option<Lock>,
    pub injected: f64,
    pub actuation_effort: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub r: f64,
    pub fd_linear: f64,
    pub measured: Option<Measured>,
    /// Set when the run at this point failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plateau {
    pub start: usize,
    pub len: usize,
    pub lock: Lock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SimConfig,
    pub estimator: Estimator,
    /// Ordered by `r`.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn measured(&self) -> impl Iterator<Item = (&SweepPoint, &Measured)> {
        self.points
            .iter()
            .filter_map(|p| p.measured.as_ref().map(|m| (p, m)))
    }

    pub fn missing(&self) -> usize {
        self.points.iter().filter(|p| p.measured.is_none()).count()
    }

    /// Mean `|f_D − fold(r)|` over the measured points.
    pub fn mean_natural_deviation(&self) -> Option<f64> {
        mean(self.measured().map(|(_, m)| m.natural_deviation))
    }

    pub fn max_natural_deviation(&self) -> Option<f64> {
        self.measured()
            .map(|(_, m)| m.natural_deviation)
            .max_by(f64::total_cmp)
    }

    /// Runs of at least `min_len` consecutive points locked on the same
    /// rational frequency.
    pub fn plateaus(&self, min_len: usize) -> Vec<Plateau> {
        let locks: Vec<Option<Lock>> = self
            .points
            .iter()
            .map(|p| p.measured.as_ref().and_then(|m| m.lock))
            .collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start < locks.len() {
            let key = locks[start].map(|l| (l.numerator, l.denominator));
            let len = locks[start..]
                .iter()
                .take_while(|l| l.map(|l| (l.numerator, l.denominator)) == key)
                .count();
            if let (Some(lock), true) = (locks[start], len >= min_len) {
                out.push(Plateau { start, len, lock });
            }
            start += len;
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn validate_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    if let Some(&bad) = grid.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::NonPositive {
            name: "grid ratio",
            value: bad,
        });
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

fn measure_point(base: &SimConfig, r: f64, estimator: Estimator) -> SweepPoint {
    let fd_linear = linear_fd(r, base.resonator.rho());
    let outcome = run(&base.with_ratio(r)).and_then(|trace| {
        let transitions = estimate_fd_transitions(&trace.bits)?;
        let spectral = estimate_fd_spectral(&trace.bits)?;
        let (fd_est, fd_crosscheck) = match estimator {
            Estimator::Transitions => (transitions, spectral),
            Estimator::Spectrum => (spectral, transitions),
        };
        Ok(Measured {
            fd_est,
            fd_crosscheck,
            deviation: (fd_est - fd_linear).abs(),
            natural_deviation: (fd_est - fold(r)).abs(),
            lock: Pattern::find_exact(trace.bits.bits(), LOCK_MAX_PERIOD)
                .map(|p| Lock::from_pattern(&p)),
            injected: trace.steady.injected_total,
            actuation_effort: trace.steady.actuation_effort,
            amplitude: trace.steady_amplitude,
        })
    });
    match outcome {
        Ok(m) => SweepPoint {
            r,
            fd_linear,
            measured: Some(m),
            failure: None,
        },
        Err(e) => SweepPoint {
            r,
            fd_linear,
            measured: None,
            failure: Some(e.to_string()),
        },
    }
}

/// Runs the loop at every ratio of `grid` and records the estimated
/// frequency next to the linear prediction. Points run in parallel; failed
/// runs become missing points rather than aborting the sweep.
pub fn staircase_sweep(
    grid: &[f64],
    base: &SimConfig,
    estimator: Estimator,
) -> Result<SweepResult> {
    let grid = validate_grid(grid)?;
    base.with_ratio(grid[0]).validate()?;
    let points = grid
        .par_iter()
        .map(|&r| measure_point(base, r, estimator))
        .collect();
    Ok(SweepResult {
        config: *base,
        estimator,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologySummary {
    pub topology: Topology,
    pub mean_deviation: Option<f64>,
    pub max_deviation: Option<f64>,
    pub injected_total: f64,
    pub actuation_effort: f64,
    pub missing: usize,
}

impl TopologySummary {
    fn of(sweep: &SweepResult) -> Self {
        Self {
            topology: sweep.config.feedback.topology,
            mean_deviation: sweep.mean_natural_deviation(),
            max_deviation: sweep.max_natural_deviation(),
            injected_total: sweep.measured().map(|(_, m)| m.injected).sum(),
            actuation_effort: sweep.measured().map(|(_, m)| m.actuation_effort).sum(),
            missing: sweep.missing(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyComparison {
    pub single: SweepResult,
    pub double: SweepResult,
    pub single_summary: TopologySummary,
    pub double_summary: TopologySummary,
}

impl TopologyComparison {
    /// True when double feedback tracks `fold(r)` more closely on average.
    pub fn double_is_closer(&self) -> bool {
        match (
            self.single_summary.mean_deviation,
            self.double_summary.mean_deviation,
        ) {
            (Some(s), Some(d)) => d < s,
            _ => false,
        }
    }
}

/// Sweeps the same grid with a single- and a double-feedback loop.
pub fn compare_topologies(
    grid: &[f64],
    base: &SimConfig,
    single: Topology,
    double: Topology,
) -> Result<TopologyComparison> {
    if single.is_double() || !double.is_double() {
        return Err(Error::Topology(
            "comparison needs one single and one double topology".into(),
        ));
    }
    let with = |topology| {
        let mut cfg = *base;
        cfg.feedback.topology = topology;
        staircase_sweep(grid, &cfg, Estimator::Transitions)
    };
    let single = with(single)?;
    let double = with(double)?;
    Ok(TopologyComparison {
        single_summary: TopologySummary::of(&single),
        double_summary: TopologySummary::of(&double),
        single,
        double,
    })
}
