use super::spectrum::{default_transform_size, spectrum, Window};
use crate::sim::BitStream;
use crate::{Error, Result};

/// Frequency from the zero-crossing rate: `transitions / (2·(N − 1))`.
pub fn estimate_fd_transitions(bits: &BitStream) -> Result<f64> {
    let b = bits.bits();
    if b.len() < 2 {
        return Err(Error::Empty("need at least two bits"));
    }
    let transitions = b.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(transitions as f64 / (2.0 * (b.len() - 1) as f64))
}

/// Frequency of the interpolated spectral peak, using the default
/// rectangular window and transform size.
pub fn estimate_fd_spectral(bits: &BitStream) -> Result<f64> {
    spectrum(
        bits,
        Window::Rectangular,
        default_transform_size(bits.len()),
    )
    .map(|s| s.peak_frequency)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(pattern: &str, n: usize) -> BitStream {
        let s: String = pattern.chars().cycle().take(n).collect();
        BitStream::from_str_bits(&s, 1.0).unwrap()
    }

    #[test]
    fn transition_examples() {
        let fd = estimate_fd_transitions(&stream("1100", 4000)).unwrap();
        assert!((fd - 0.25).abs() < 1e-3);
        assert_eq!(estimate_fd_transitions(&stream("1", 100)).unwrap(), 0.0);
        assert_eq!(estimate_fd_transitions(&stream("10", 100)).unwrap(), 0.5);
        assert!(estimate_fd_transitions(&stream("1", 1)).is_err());
    }

    #[test]
    fn spectral_estimate_of_square_wave() {
        let fd = estimate_fd_spectral(&stream("1100", 4000)).unwrap();
        assert!((fd - 0.25).abs() < 1.0 / 16384.0);
    }
}
