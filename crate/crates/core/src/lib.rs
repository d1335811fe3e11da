//! Discrete-time model of the pulsed digital oscillator (PDO).
//!
//! A MEMS resonator (an underdamped mass-spring-damper) is sampled by a sign
//! detector. The detector's bits pass through one or two delay paths and gate
//! short force impulses back onto the resonator. Between samples the resonator
//! evolves under its exact closed-form solution, so the only approximation in
//! the loop is the one-bit quantizer itself.
//!
//! The crate is split along the loop:
//!
//! * [`model`]: resonator parameters, exact propagation, impulses, energy.
//! * [`feedback`]: quantizer, delay line, single/double pulse levels.
//! * [`sim`]: the closed loop, traces, energy ledger, period detection.
//! * [`analysis`]: the linear frequency law, frequency estimators, spectra,
//!   alias unfolding, staircase sweeps and topology comparison.
//!
//! ```
//! use pdo_core::{FeedbackConfig, ResonatorParams, SimConfig, Topology};
//!
//! let resonator = ResonatorParams::new(1.0, 1e-3).unwrap();
//! let feedback = FeedbackConfig::new(Topology::single(1).unwrap(), 0.01);
//! let trace = pdo_core::run(&SimConfig::new(resonator, 0.25, feedback)).unwrap();
//! let found = pdo_core::detect_period(&trace.bits, 16).unwrap();
//! assert_eq!(found.period, 4);
//! ```

pub mod analysis;
mod error;
pub mod feedback;
pub mod model;
pub mod sim;

pub use analysis::{
    compare_topologies, default_transform_size, estimate_fd_spectral, estimate_fd_transitions,
    fold, linear_fd, spectrum, staircase_sweep, unfold_frequency, Estimator, Lock, Measured,
    Plateau, SpectrumResult, SweepPoint, SweepResult, TopologyComparison, TopologySummary,
    Unfolded, Window, LOCK_MAX_PERIOD,
};
pub use error::{Error, Result};
pub use feedback::{pulse_level, quantize, Combine, DelayLine, FeedbackConfig, Polarity, Topology};
pub use model::{ResonatorParams, SimState};
pub use sim::{detect_period, run, BitStream, EnergyLedger, Pattern, SimConfig, SimTrace};
