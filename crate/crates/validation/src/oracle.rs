//! Independent numerical reference for the free resonator.

use pdo_core::ResonatorParams;

pub const STEPS_PER_PERIOD: usize = 20_000;

/// Classical fourth-order Runge-Kutta on `m x'' + b x' + k x = 0`,
/// integrating for `duration` in `steps` equal steps.
pub fn rk4(params: &ResonatorParams, x: f64, v: f64, duration: f64, steps: usize) -> (f64, f64) {
    let (m, b, k) = (params.mass(), params.damping(), params.stiffness());
    let f = |x: f64, v: f64| (v, -(b * v + k * x) / m);
    let h = duration / steps as f64;
    let (mut x, mut v) = (x, v);
    for _ in 0..steps {
        let (k1x, k1v) = f(x, v);
        let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        let (k4x, k4v) = f(x + h * k3x, v + h * k3v);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (x, v)
}
