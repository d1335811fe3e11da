//! Linear frequency law, bitstream frequency estimation, spectra, alias
//! unfolding and staircase sweeps.

mod estimate;
mod linear;
mod spectrum;
mod sweep;
mod unfold;

pub use estimate::{estimate_fd_spectral, estimate_fd_transitions};
pub use linear::{fold, linear_fd};
pub use spectrum::{default_transform_size, spectrum, SpectrumResult, Window};
pub use sweep::{
    compare_topologies, staircase_sweep, Estimator, Lock, Measured, Plateau, SweepPoint,
    SweepResult, TopologyComparison, TopologySummary, LOCK_MAX_PERIOD,
};
pub use unfold::{unfold_frequency, Unfolded};
