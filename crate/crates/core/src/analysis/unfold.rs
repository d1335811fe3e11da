use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unfolded {
    /// Every physical frequency (Hz) that aliases to the measured `f_D`,
    /// ascending, up to at least twice the hint.
    pub candidates: Vec<f64>,
    /// The candidate closest to the hint.
    pub best: f64,
}

/// Lists the images `(k + f_D)·fS` and `(k + 1 − f_D)·fS` of a sampled tone
/// and picks the one closest to the expected natural frequency.
pub fn unfold_frequency(fd: f64, fs: f64, hint_f0: f64) -> Result<Unfolded> {
    if !(0.0..=0.5).contains(&fd) {
        return Err(Error::Config(format!("f_D must be in [0, 0.5], got {fd}")));
    }
    for (name, value) in [("fS", fs), ("hint_f0", hint_f0)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositive { name, value });
        }
    }

    let mut candidates = Vec::new();
    let mut k = 0.0;
    loop {
        candidates.push((k + fd) * fs);
        let upper = (k + 1.0 - fd) * fs;
        candidates.push(upper);
        if upper >= 2.0 * hint_f0 {
            break;
        }
        k += 1.0;
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let best = candidates
        .iter()
        .copied()
        .min_by(|a, b| (a - hint_f0).abs().total_cmp(&(b - hint_f0).abs()))
        .expect("at least one candidate");
    Ok(Unfolded { candidates, best })
}
