//! The closed loop: sample, quantize, gate a pulse through the delay line,
//! kick, and propagate to the next sample.

use std::fmt;

use serde::Serialize;

use crate::feedback::{pulse_level, quantize, DelayLine, FeedbackConfig};
use crate::model::{ResonatorParams, SimState, Transition};
use crate::{Error, Result};

pub const DEFAULT_TRANSIENT: usize = 2048;
pub const DEFAULT_MEASURE: usize = 8192;
pub const DEFAULT_INITIAL_X: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub resonator: ResonatorParams,
    /// Sampling ratio `f0 / fS`.
    pub ratio: f64,
    pub feedback: FeedbackConfig,
    pub transient_samples: usize,
    pub measure_samples: usize,
    pub initial_state: SimState,
}

impl SimConfig {
    pub fn new(resonator: ResonatorParams, ratio: f64, feedback: FeedbackConfig) -> Self {
        Self {
            resonator,
            ratio,
            feedback,
            transient_samples: DEFAULT_TRANSIENT,
            measure_samples: DEFAULT_MEASURE,
            initial_state: SimState::new(DEFAULT_INITIAL_X, 0.0),
        }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.ratio = ratio;
        self
    }

    pub fn with_samples(mut self, transient: usize, measure: usize) -> Self {
        self.transient_samples = transient;
        self.measure_samples = measure;
        self
    }

    pub fn with_initial_state(mut self, state: SimState) -> Self {
        self.initial_state = state;
        self
    }

    /// Sampling frequency `fS = f0 / ratio`.
    pub fn sample_rate(&self) -> f64 {
        self.resonator.f0() / self.ratio
    }

    pub fn sample_period(&self) -> f64 {
        self.ratio / self.resonator.f0()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(Error::NonPositive {
                name: "ratio",
                value: self.ratio,
            });
        }
        if self.measure_samples == 0 {
            return Err(Error::Config("measure_samples must be >= 1".into()));
        }
        self.feedback.validate()?;
        self.initial_state.check_finite()
    }
}

/// Ordered detector output with its sample rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitStream {
    bits: Vec<u8>,
    sample_rate: f64,
}

impl BitStream {
    pub fn new(bits: Vec<u8>, sample_rate: f64) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Empty("bit stream"));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Config(format!("bits must be 0 or 1, got {bad}")));
        }
        Ok(Self { bits, sample_rate })
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn from_str_bits(s: &str, sample_rate: f64) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Config(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits, sample_rate)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Energy bookkeeping over an interval of the run.
///
/// Per sample, `injected` gains the mechanical energy change caused by the
/// kick and `dissipated` the energy lost during free propagation, so
/// `final − initial = injected − dissipated` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyLedger {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub injected_total: f64,
    pub dissipated_total: f64,
    /// Total delivered momentum, `Σ level·J`. Proportional to actuator drive
    /// (pulse count times pulse width) rather than mechanical work.
    pub actuation_effort: f64,
    pub pulse_events: u64,
}

impl EnergyLedger {
    /// `final − initial − injected + dissipated`; zero up to rounding.
    pub fn residual(&self) -> f64 {
        self.final_energy - self.initial_energy - self.injected_total + self.dissipated_total
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.carry += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Ledger under construction.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    initial_energy: f64,
    final_energy: f64,
    injected: CompensatedSum,
    dissipated: CompensatedSum,
    effort: CompensatedSum,
    pulse_events: u64,
}

impl Tally {
    fn starting_at(energy: f64) -> Self {
        Self {
            initial_energy: energy,
            final_energy: energy,
            ..Self::default()
        }
    }

    fn finish(self) -> EnergyLedger {
        EnergyLedger {
            initial_energy: self.initial_energy,
            final_energy: self.final_energy,
            injected_total: self.injected.value(),
            dissipated_total: self.dissipated.value(),
            actuation_effort: self.effort.value(),
            pulse_events: self.pulse_events,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub bits: BitStream,
    /// Position seen by the detector at each measured sample.
    pub positions: Vec<f64>,
    /// Velocity at each measured sample, before the kick.
    pub velocities: Vec<f64>,
    pub pulse_levels: Vec<u8>,
    /// Whole run, from the initial state.
    pub ledger: EnergyLedger,
    /// Measurement window only.
    pub steady: EnergyLedger,
    /// Largest envelope amplitude `sqrt(2E/k)` over the measurement window.
    pub steady_amplitude: f64,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Runs the loop for `transient_samples + measure_samples` samples.
///
/// Each sample: the detector reads `x` and emits `b[n]`; the pulse level is
/// taken from the delay line (which still holds `b[n−1], b[n−2], …`); `b[n]`
/// is shifted in; the impulse `polarity·J·level` is applied; the resonator
/// propagates for one sample period. Only post-transient samples are kept.
pub fn run(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let params = &config.resonator;
    let feedback = &config.feedback;
    let step = Transition::new(params, config.sample_period());
    let mut line = DelayLine::for_topology(&feedback.topology);

    let n_total = config.transient_samples + config.measure_samples;
    let n_measure = config.measure_samples;
    let mut bits = Vec::with_capacity(n_measure);
    let mut positions = Vec::with_capacity(n_measure);
    let mut velocities = Vec::with_capacity(n_measure);
    let mut levels = Vec::with_capacity(n_measure);

    let mut state = config.initial_state;
    let mut energy = params.energy(&state);
    let mut whole = Tally::starting_at(energy);
    let mut steady = Tally::default();
    let mut amplitude: f64 = 0.0;

    for n in 0..n_total {
        let measuring = n >= config.transient_samples;
        if n == config.transient_samples {
            steady = Tally::starting_at(energy);
        }

        let bit = quantize(state.x, feedback.reference);
        let level = pulse_level(&line, &feedback.topology);
        line.push(bit);

        if measuring {
            bits.push(bit);
            positions.push(state.x);
            velocities.push(state.v);
            levels.push(level);
            amplitude = amplitude.max(params.envelope_amplitude(&state));
        }

        let kick = feedback.kick(level);
        let kicked = params.apply_impulse(state, kick);
        let energy_kicked = params.energy(&kicked);
        let next = step.apply(kicked);
        if !next.is_finite() {
            return Err(Error::Diverged {
                sample: n,
                x: next.x,
                v: next.v,
            });
        }
        let energy_next = params.energy(&next);

        let injected = energy_kicked - energy;
        let dissipated = energy_kicked - energy_next;
        let effort = kick.abs();
        let event = u64::from(level > 0);
        for ledger in [Some(&mut whole), measuring.then_some(&mut steady)]
            .into_iter()
            .flatten()
        {
            ledger.injected.add(injected);
            ledger.dissipated.add(dissipated);
            ledger.effort.add(effort);
            ledger.pulse_events += event;
            ledger.final_energy = energy_next;
        }

        state = next;
        energy = energy_next;
    }

    Ok(SimTrace {
        bits: BitStream::new(bits, config.sample_rate())?,
        positions,
        velocities,
        pulse_levels: levels,
        ledger: whole.finish(),
        steady: steady.finish(),
        steady_amplitude: amplitude,
    })
}

/// A repeating tail found in a symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub period: usize,
    /// One period of the sequence as digits, ending at the last sample.
    pub pattern: String,
}

impl Pattern {
    /// Smallest `p <= max_period` whose last `4·p` values are exactly
    /// `p`-periodic.
    pub fn find(values: &[u8], max_period: usize) -> Option<Self> {
        const REPEATS: usize = 4;
        (1..=max_period)
            .take_while(|p| REPEATS * p <= values.len())
            .find(|&p| {
                let tail = &values[values.len() - REPEATS * p..];
                tail.iter().zip(&tail[p..]).all(|(a, b)| a == b)
            })
            .map(|p| Self::from_tail(values, p))
    }

    /// Smallest `p <= max_period` for which the whole sequence is
    /// `p`-periodic, with at least two full repetitions.
    pub fn find_exact(values: &[u8], max_period: usize) -> Option<Self> {
        (1..=max_period)
            .take_while(|p| 2 * p <= values.len())
            .find(|&p| values.iter().zip(&values[p..]).all(|(a, b)| a == b))
            .map(|p| Self::from_tail(values, p))
    }

    fn from_tail(values: &[u8], period: usize) -> Self {
        let pattern = values[values.len() - period..]
            .iter()
            .map(|&v| char::from_digit(u32::from(v), 10).unwrap_or('?'))
            .collect();
        Self { period, pattern }
    }

    /// True if `other` is a cyclic rotation of this pattern.
    pub fn is_rotation_of(&self, other: &str) -> bool {
        self.pattern.len() == other.len() && format!("{0}{0}", self.pattern).contains(other)
    }

    /// Number of value changes around one period, counting the wrap.
    pub fn transitions(&self) -> usize {
        let b = self.pattern.as_bytes();
        (0..b.len())
            .filter(|&i| b[i] != b[(i + 1) % b.len()])
            .count()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (period {})", self.pattern, self.period)
    }
}

/// Detects a repeating bit pattern at the end of the stream.
pub fn detect_period(bits: &BitStream, max_period: usize) -> Option<Pattern> {
    Pattern::find(bits.bits(), max_period)
}
