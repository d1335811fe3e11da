//! Resonator model: a 1D mass-spring-damper, evolved exactly between samples.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::{Error, Result};

/// Parameters of an underdamped resonator.
///
/// Stored as natural frequency, damping ratio and mass. Stiffness and the
/// damping coefficient are derived from them:
/// `k = m·(2π·f0)²` and `b = 2·rho·sqrt(k·m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonatorParams {
    f0: f64,
    rho: f64,
    mass: f64,
}

impl ResonatorParams {
    /// Unit-mass resonator with natural frequency `f0` (Hz) and damping ratio `rho`.
    pub fn new(f0: f64, rho: f64) -> Result<Self> {
        Self::with_mass(f0, rho, 1.0)
    }

    /// Normalized resonator: `ω0 = 1`, `mass = 1`.
    pub fn normalized(rho: f64) -> Result<Self> {
        Self::new(1.0 / TAU, rho)
    }

    pub fn with_mass(f0: f64, rho: f64, mass: f64) -> Result<Self> {
        check_positive("f0", f0)?;
        check_positive("mass", mass)?;
        if !rho.is_finite() {
            return Err(Error::NonFinite("rho"));
        }
        if rho < 0.0 {
            return Err(Error::NegativeDamping(rho));
        }
        if rho >= 1.0 {
            return Err(Error::Overdamped(rho));
        }
        Ok(Self { f0, rho, mass })
    }

    /// Builds parameters from mass, stiffness and damping coefficient.
    pub fn from_physical(mass: f64, stiffness: f64, damping: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("stiffness", stiffness)?;
        if !damping.is_finite() {
            return Err(Error::NonFinite("damping"));
        }
        if damping < 0.0 {
            return Err(Error::NegativeDamping(damping));
        }
        let rho = damping / (2.0 * (stiffness * mass).sqrt());
        let f0 = (stiffness / mass).sqrt() / TAU;
        Self::with_mass(f0, rho, mass)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Natural angular frequency `ω0 = 2π·f0`.
    pub fn omega0(&self) -> f64 {
        TAU * self.f0
    }

    /// Damped angular frequency `ωd = ω0·sqrt(1 − rho²)`.
    pub fn damped_omega(&self) -> f64 {
        self.omega0() * (1.0 - self.rho * self.rho).sqrt()
    }

    /// Exponential decay rate of the envelope, `rho·ω0`.
    pub fn decay_rate(&self) -> f64 {
        self.rho * self.omega0()
    }

    pub fn stiffness(&self) -> f64 {
        let w0 = self.omega0();
        self.mass * w0 * w0
    }

    pub fn damping(&self) -> f64 {
        2.0 * self.rho * (self.stiffness() * self.mass).sqrt()
    }

    /// Advances `state` by `dt` along the exact free (unforced) solution.
    pub fn propagate(&self, state: SimState, dt: f64) -> Result<SimState> {
        state.check_finite()?;
        if !dt.is_finite() {
            return Err(Error::NonFinite("dt"));
        }
        if dt < 0.0 {
            return Err(Error::Config(format!("dt must be non-negative, got {dt}")));
        }
        Ok(Transition::new(self, dt).apply(state))
    }

    /// Applies an instantaneous momentum impulse: only the velocity changes.
    pub fn apply_impulse(&self, state: SimState, impulse: f64) -> SimState {
        SimState {
            v: state.v + impulse / self.mass,
            ..state
        }
    }

    /// Mechanical energy `½·k·x² + ½·m·v²`.
    pub fn energy(&self, state: &SimState) -> f64 {
        0.5 * self.stiffness() * state.x * state.x + 0.5 * self.mass * state.v * state.v
    }

    /// Envelope amplitude `sqrt(2E/k)`: the peak position the current energy
    /// would reach with no further damping or impulses.
    pub fn envelope_amplitude(&self, state: &SimState) -> f64 {
        (2.0 * self.energy(state) / self.stiffness()).sqrt()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// Position, velocity and elapsed time of the resonator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SimState {
    pub x: f64,
    pub v: f64,
    pub t: f64,
}

impl SimState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v, t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.t.is_finite()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if !self.x.is_finite() {
            return Err(Error::NonFinite("x"));
        }
        if !self.v.is_finite() {
            return Err(Error::NonFinite("v"));
        }
        if !self.t.is_finite() {
            return Err(Error::NonFinite("t"));
        }
        Ok(())
    }
}

/// State-transition matrix of the free resonator for a fixed step.
///
/// With `a = rho·ω0` and `ωd` the damped frequency,
///
/// ```text
/// x(dt) = e^{-a·dt} [ x·cos(ωd·dt) + (v + a·x)/ωd · sin(ωd·dt) ]
/// v(dt) = e^{-a·dt} [ v·cos(ωd·dt) − (ω0²·x + a·v)/ωd · sin(ωd·dt) ]
/// ```
#[derive(Debug, Clone, Copy)]
pub(crate) struct Transition {
    xx: f64,
    xv: f64,
    vx: f64,
    vv: f64,
    dt: f64,
}

impl Transition {
    pub(crate) fn new(params: &ResonatorParams, dt: f64) -> Self {
        let w0 = params.omega0();
        let wd = params.damped_omega();
        let a = params.decay_rate();
        let envelope = (-a * dt).exp();
        let (s, c) = (wd * dt).sin_cos();
        let s_over_wd = s / wd;
        Self {
            xx: envelope * (c + a * s_over_wd),
            xv: envelope * s_over_wd,
            vx: -envelope * w0 * w0 * s_over_wd,
            vv: envelope * (c - a * s_over_wd),
            dt,
        }
    }

    #[inline]
    pub(crate) fn apply(&self, s: SimState) -> SimState {
        SimState {
            x: self.xx * s.x + self.xv * s.v,
            v: self.vx * s.x + self.vv * s.v,
            t: s.t + self.dt,
        }
    }
}
