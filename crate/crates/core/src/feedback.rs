//! Digital half of the loop: sign quantizer, delay line and pulse levels.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One-bit position detector. Ties resolve to 1.
#[inline]
pub fn quantize(x: f64, reference: f64) -> u8 {
    u8::from(x >= reference)
}

/// How the two delayed bits of a double-feedback loop form a pulse level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    /// `b[n−m1] + (1 − b[n−m2])`: the unipolar form of a first-difference
    /// (high-pass) filter `b[n−m1] − b[n−m2]`, offset into `{0, 1, 2}`.
    #[default]
    Difference,
    /// `b[n−m1] + b[n−m2]`.
    Sum,
}

/// Delay taps of the feedback loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Single {
        taps: usize,
    },
    Double {
        taps1: usize,
        taps2: usize,
        combine: Combine,
    },
}

impl Topology {
    pub fn single(taps: usize) -> Result<Self> {
        Self::Single { taps }.validated()
    }

    /// Double feedback with the default [`Combine::Difference`] path.
    pub fn double(taps1: usize, taps2: usize) -> Result<Self> {
        Self::double_with(taps1, taps2, Combine::default())
    }

    pub fn double_with(taps1: usize, taps2: usize, combine: Combine) -> Result<Self> {
        Self::Double {
            taps1,
            taps2,
            combine,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Single { taps: 0 } => Err(Error::Topology("tap count must be >= 1".into())),
            Self::Double { taps1, taps2, .. } if taps1 == 0 || taps2 == 0 => {
                Err(Error::Topology("tap counts must be >= 1".into()))
            }
            Self::Double { taps1, taps2, .. } if taps1 == taps2 => Err(Error::Topology(format!(
                "double feedback needs distinct taps, got {taps1} twice"
            ))),
            ok => Ok(ok),
        }
    }

    pub fn max_tap(&self) -> usize {
        match *self {
            Self::Single { taps } => taps,
            Self::Double { taps1, taps2, .. } => taps1.max(taps2),
        }
    }

    pub fn is_double(&self) -> bool {
        matches!(self, Self::Double { .. })
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::Single { taps: 1 }
    }
}

/// Past detector bits, most recent first. Starts cleared.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelayLine {
    history: Vec<u8>,
}

impl DelayLine {
    pub fn new(capacity: usize) -> Self {
        Self {
            history: vec![0; capacity],
        }
    }

    pub fn for_topology(topology: &Topology) -> Self {
        Self::new(topology.max_tap())
    }

    /// Builds a line from explicit history (`history[0]` is `b[n−1]`).
    pub fn from_history(history: &[u8]) -> Result<Self> {
        if let Some(bad) = history.iter().find(|&&b| b > 1) {
            return Err(Error::Config(format!(
                "delay line bits must be 0 or 1, got {bad}"
            )));
        }
        Ok(Self {
            history: history.to_vec(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.history.len()
    }

    /// Bit pushed `delay` steps ago (`delay = 1` is the latest).
    ///
    /// Panics if `delay` is zero or exceeds the capacity.
    pub fn bit(&self, delay: usize) -> u8 {
        self.history[delay - 1]
    }

    pub fn history(&self) -> &[u8] {
        &self.history
    }

    /// Shifts `bit` in as the most recent entry, dropping the oldest.
    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        if let Some(last) = self.history.len().checked_sub(1) {
            self.history.copy_within(0..last, 1);
            self.history[0] = bit;
        }
    }

    /// Value-returning variant of [`DelayLine::push`].
    #[must_use]
    pub fn pushed(&self, bit: u8) -> Self {
        let mut next = self.clone();
        next.push(bit);
        next
    }
}

/// Pulse level for the current sample, read from the delayed bits.
///
/// Single feedback yields `{0, 1}`; double feedback yields `{0, 1, 2}`.
/// Panics if the line is shorter than the topology's largest tap; use
/// [`DelayLine::for_topology`] to size it.
#[inline]
pub fn pulse_level(line: &DelayLine, topology: &Topology) -> u8 {
    match *topology {
        Topology::Single { taps } => line.bit(taps),
        Topology::Double {
            taps1,
            taps2,
            combine: Combine::Sum,
        } => line.bit(taps1) + line.bit(taps2),
        Topology::Double {
            taps1,
            taps2,
            combine: Combine::Difference,
        } => line.bit(taps1) + 1 - line.bit(taps2),
    }
}

/// Actuator direction relative to positive displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    /// Pulses push toward negative displacement (restoring for `m = 1`).
    #[default]
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Self::Positive => 1.0,
            Self::Negative => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Self::Positive),
            -1 => Ok(Self::Negative),
            other => Err(Error::Config(format!(
                "polarity must be +1 or -1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackConfig {
    pub topology: Topology,
    /// Momentum delivered per unit pulse level.
    pub impulse: f64,
    pub polarity: Polarity,
    /// Quantizer threshold position.
    pub reference: f64,
}

impl FeedbackConfig {
    pub fn new(topology: Topology, impulse: f64) -> Self {
        Self {
            topology,
            impulse,
            polarity: Polarity::default(),
            reference: 0.0,
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validated()?;
        if !self.impulse.is_finite() || self.impulse < 0.0 {
            return Err(Error::Config(format!(
                "impulse must be finite and >= 0, got {}",
                self.impulse
            )));
        }
        if !self.reference.is_finite() {
            return Err(Error::NonFinite("quantizer reference"));
        }
        Ok(())
    }

    /// Signed momentum delivered for a given pulse level.
    #[inline]
    pub fn kick(&self, level: u8) -> f64 {
        self.polarity.sign() * self.impulse * f64::from(level)
    }
}
