//! Shared fixtures for the benchmarks.

use pdo_core::{FeedbackConfig, ResonatorParams, SimConfig, Topology};

/// A lightly damped loop at `ratio` with the given topology.
pub fn config(ratio: f64, topology: Topology) -> SimConfig {
    let resonator = ResonatorParams::normalized(0.05).expect("valid damping");
    SimConfig::new(resonator, ratio, FeedbackConfig::new(topology, 0.01))
}

/// `n` evenly spaced ratios over `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
