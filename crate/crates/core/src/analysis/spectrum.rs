use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::sim::BitStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n == 1 => vec![1.0],
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos()))
                .collect(),
        }
    }
}

/// Next power of two at or above four times the record length.
pub fn default_transform_size(bit_count: usize) -> usize {
    (4 * bit_count.max(1)).next_power_of_two()
}

/// One-sided magnitude spectrum of a bitstream with its interpolated peak.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub window: Window,
    pub transform_size: usize,
    pub sample_rate: f64,
    /// Bin centres in cycles/sample, `0..=0.5`.
    pub freq_norm: Vec<f64>,
    /// Bin magnitudes normalized by the window sum: a full-scale ±1 tone of
    /// amplitude `A` reads `A/2`.
    pub magnitudes: Vec<f64>,
    /// Interpolated peak location in cycles/sample, in `(0, 0.5]`.
    pub peak_frequency: f64,
    pub peak_magnitude: f64,
}

impl SpectrumResult {
    pub fn freq_hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.freq_norm.iter().map(|f| f * self.sample_rate)
    }

    pub fn peak_frequency_hz(&self) -> f64 {
        self.peak_frequency * self.sample_rate
    }
}

/// Maps bits to ±1, windows, zero-pads to `transform_size` and transforms.
///
/// The peak is the largest non-DC bin, refined by a three-point parabola
/// through the log magnitudes of it and its neighbours.
pub fn spectrum(bits: &BitStream, window: Window, transform_size: usize) -> Result<SpectrumResult> {
    let n = bits.len();
    if n == 0 {
        return Err(Error::Empty("bit stream"));
    }
    if transform_size < n || !transform_size.is_power_of_two() || transform_size < 2 {
        return Err(Error::Config(format!(
            "transform size must be a power of two >= {n} (and >= 2), got {transform_size}"
        )));
    }

    let coeffs = window.coefficients(n);
    let gain: f64 = coeffs.iter().sum();
    let mut buf: Vec<Complex<f64>> = bits
        .bits()
        .iter()
        .zip(&coeffs)
        .map(|(&b, &w)| Complex::new(if b == 1 { w } else { -w }, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(transform_size)
        .collect();
    FftPlanner::new()
        .plan_fft_forward(transform_size)
        .process(&mut buf);

    let half = transform_size / 2;
    let magnitudes: Vec<f64> = buf[..=half].iter().map(|c| c.norm() / gain).collect();
    let freq_norm: Vec<f64> = (0..=half)
        .map(|k| k as f64 / transform_size as f64)
        .collect();

    let peak_bin = (1..=half).fold(1, |best, k| {
        if magnitudes[k] > magnitudes[best] {
            k
        } else {
            best
        }
    });
    // The spectrum of a real signal is symmetric about Nyquist.
    let right = if peak_bin == half {
        half - 1
    } else {
        peak_bin + 1
    };
    let (offset, peak_magnitude) = parabolic_log_peak(
        magnitudes[peak_bin - 1],
        magnitudes[peak_bin],
        magnitudes[right],
    );
    let peak_frequency =
        ((peak_bin as f64 + offset) / transform_size as f64).clamp(f64::MIN_POSITIVE, 0.5);

    Ok(SpectrumResult {
        window,
        transform_size,
        sample_rate: bits.sample_rate(),
        freq_norm,
        magnitudes,
        peak_frequency,
        peak_magnitude,
    })
}

/// Vertex of the parabola through `(−1, ln a), (0, ln b), (1, ln c)`.
/// Falls back to the centre bin when the points are not a strict peak.
fn parabolic_log_peak(a: f64, b: f64, c: f64) -> (f64, f64) {
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        return (0.0, b);
    }
    let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
    let denom = la - 2.0 * lb + lc;
    if denom >= 0.0 {
        return (0.0, b);
    }
    let offset = (0.5 * (la - lc) / denom).clamp(-0.5, 0.5);
    (offset, (lb - 0.25 * (la - lc) * offset).exp())
}
