use std::f64::consts::{PI, TAU};

/// Normalized oscillation frequency (cycles/sample) predicted by the linear
/// analysis of the single-delay loop:
///
/// ```text
/// f_D = acos( e^{-rho·2π·r} · cos(2π·r·sqrt(1 − rho²)) ) / 2π
/// ```
///
/// `r = f0/fS`. Returns a value in `[0, 0.5]`. The arccosine is evaluated as
/// `2·atan2(sqrt(1 − c), sqrt(1 + c))` with both `1 ∓ c` formed without
/// cancellation, so the result stays accurate near the plateau edges
/// `f_D → 0` and `f_D → 0.5`.
pub fn linear_fd(r: f64, rho: f64) -> f64 {
    let decay = -rho * TAU * r;
    let envelope = decay.exp();
    let half_phase = PI * r * (1.0 - rho * rho).sqrt();
    let (s, c) = half_phase.sin_cos();
    // 1 − e^{-a}cos φ = (1 − e^{-a}) + e^{-a}·2sin²(φ/2), and likewise for 1 + c.
    let one_minus = -decay.exp_m1() + envelope * 2.0 * s * s;
    let one_plus = -decay.exp_m1() + envelope * 2.0 * c * c;
    let theta = 2.0 * one_minus.max(0.0).sqrt().atan2(one_plus.max(0.0).sqrt());
    (theta / TAU).clamp(0.0, 0.5)
}

/// Distance from `r` to the nearest integer: the aliased image of a tone at
/// `r` cycles/sample.
pub fn fold(r: f64) -> f64 {
    (r - r.round()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_examples() {
        assert_eq!(linear_fd(0.25, 0.0), 0.25);
        assert_eq!(linear_fd(0.5, 0.0), 0.5);
    }

    /// Reference values from a 40-digit evaluation of the arccos form
    /// (mpmath), with inputs taken as the exact binary doubles.
    #[test]
    #[allow(clippy::excessive_precision)]
    fn matches_high_precision_values() {
        let cases = [
            (0.25, 0.05, 0.249_710_923_850_620_113_2),
            (0.4, 0.05, 0.376_070_811_113_066_570_6),
            (0.48, 0.05, 0.412_557_391_859_522_067_8),
            (0.1, 0.3, 0.130_154_900_991_529_829_6),
            (1.3, 0.2, 0.254_616_973_609_735_910_9),
        ];
        for (r, rho, expected) in cases {
            let got = linear_fd(r, rho);
            assert!(
                (got - expected).abs() < 1e-14,
                "r={r} rho={rho}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn agrees_with_naive_arccos_away_from_edges() {
        for i in 1..200 {
            let r = i as f64 * 0.013;
            for rho in [0.0, 0.01, 0.2, 0.6] {
                let naive = ((-rho * TAU * r).exp() * (TAU * r * (1.0 - rho * rho).sqrt()).cos())
                    .acos()
                    / TAU;
                assert!((linear_fd(r, rho) - naive).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fold_values() {
        assert_eq!(fold(0.3), 0.3);
        assert!((fold(0.7) - 0.3).abs() < 1e-15);
        assert!((fold(2.45) - 0.45).abs() < 1e-15);
        assert_eq!(fold(3.0), 0.0);
    }

    #[test]
    fn range_over_grid() {
        for i in 1..=1000 {
            let r = 4.0 * i as f64 / 1000.0;
            for j in 0..100 {
                let fd = linear_fd(r, 0.99 * j as f64 / 99.0);
                assert!((0.0..=0.5).contains(&fd), "r={r}: {fd}");
            }
        }
    }

    #[test]
    fn lossless_identity() {
        for i in 1..=1000 {
            let r = 3.0 * i as f64 / 1000.0;
            assert!((linear_fd(r, 0.0) - fold(r)).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn damping_pulls_quarter_ratio_monotonically() {
        let mut last = 0.0;
        for i in 0..=300 {
            let rho = 0.3 * i as f64 / 300.0;
            let pull = (linear_fd(0.25, rho) - 0.25).abs();
            assert!(pull.is_finite());
            assert!(pull >= last, "rho={rho}");
            assert!(pull - last < 1e-3, "jump at rho={rho}");
            last = pull;
        }
        assert!(last > 0.0);
    }
}
