use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("damping ratio must be non-negative, got {0}")]
    NegativeDamping(f64),

    /// Critically damped and overdamped resonators are not modelled.
    #[error("resonator is not underdamped: rho = {0} (need rho < 1)")]
    Overdamped(f64),

    #[error("{0} is not finite")]
    NonFinite(&'static str),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("state diverged at sample {sample}: x = {x}, v = {v}")]
    Diverged { sample: usize, x: f64, v: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}
