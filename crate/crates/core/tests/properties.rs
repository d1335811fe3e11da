use std::f64::consts::TAU;

use pdo_core::{
    estimate_fd_transitions, run, spectrum, BitStream, FeedbackConfig, Pattern, Polarity,
    ResonatorParams, SimConfig, SimState, Topology, Window,
};
use proptest::prelude::*;

/// Sign of a sinusoid at the rational frequency `q/p`, sampled `n` times.
fn sampled_sign(q: u32, p: u32, phase: f64, n: usize) -> BitStream {
    let f = f64::from(q) / f64::from(p);
    let bits = (0..n)
        .map(|i| u8::from((TAU * f * i as f64 + phase).cos() >= 0.0))
        .collect();
    BitStream::new(bits, 1.0).unwrap()
}

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        (1usize..4).prop_map(|m| Topology::single(m).unwrap()),
        (1usize..4, 1usize..4)
            .prop_filter("distinct taps", |(a, b)| a != b)
            .prop_map(|(a, b)| Topology::double(a, b).unwrap()),
    ]
}

fn sim_config() -> impl Strategy<Value = SimConfig> {
    (
        0.05f64..0.95,
        0.0f64..0.2,
        topology(),
        1e-3f64..1.0,
        any::<bool>(),
        -1.0f64..1.0,
    )
        .prop_map(|(ratio, rho, topology, impulse, positive, x0)| {
            let polarity = if positive {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            SimConfig::new(
                ResonatorParams::new(1.0, rho).unwrap(),
                ratio,
                FeedbackConfig::new(topology, impulse).with_polarity(polarity),
            )
            .with_samples(512, 2048)
            .with_initial_state(SimState::new(x0, 0.0))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_agree_on_periodic_streams(
        (q, p) in (3u32..=64).prop_flat_map(|p| (1..p.div_ceil(2), Just(p)))
            .prop_filter("coprime, below Nyquist", |&(q, p)| {
                2 * q < p && num_gcd(q, p) == 1
            }),
        phase in 0.0f64..TAU,
    ) {
        let n = 4096;
        let bits = sampled_sign(q, p, phase, n);
        let transitions = estimate_fd_transitions(&bits).unwrap();
        let peak = spectrum(&bits, Window::Rectangular, n).unwrap().peak_frequency;
        prop_assert!(
            (transitions - peak).abs() <= 1.0 / n as f64,
            "q/p = {q}/{p}: transitions {transitions}, peak {peak}"
        );
    }

    #[test]
    fn ledger_balances_and_runs_repeat(cfg in sim_config()) {
        let a = run(&cfg).unwrap();
        for ledger in [a.ledger, a.steady] {
            prop_assert!(ledger.residual().abs() <= 1e-9 * ledger.final_energy.max(1.0));
        }
        prop_assert_eq!(&a, &run(&cfg).unwrap());
    }

    #[test]
    fn lossless_runs_do_not_dissipate(mut cfg in sim_config()) {
        cfg.resonator = ResonatorParams::new(1.0, 0.0).unwrap();
        cfg.initial_state = SimState::new(1e-6, 0.0);
        let l = run(&cfg).unwrap().ledger;
        prop_assert!(l.injected_total >= 0.0);
        prop_assert!(l.dissipated_total.abs() <= 1e-9 * l.injected_total.max(1e-300));
    }

    #[test]
    fn detects_planted_period(word in prop::collection::vec(0u8..=1, 1..12), reps in 4usize..8) {
        let bits: Vec<u8> = word.iter().copied().cycle().take(word.len() * reps).collect();
        let found = Pattern::find(&bits, 16).unwrap();
        prop_assert!(found.period <= word.len());
        let tail = &bits[bits.len() - 4 * found.period..];
        prop_assert!(tail.iter().zip(&tail[found.period..]).all(|(a, b)| a == b));
        // The whole sequence repeats with the planted word's length.
        prop_assert!(Pattern::find_exact(&bits, 16).unwrap().period <= word.len());
    }
}

fn num_gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[test]
fn bounded_regime_at_quarter_ratio() {
    for topology in [
        Topology::single(1).unwrap(),
        Topology::double(1, 2).unwrap(),
    ] {
        let cfg = SimConfig::new(
            ResonatorParams::new(1.0, 0.05).unwrap(),
            0.25,
            FeedbackConfig::new(topology, 0.01),
        );
        let trace = run(&cfg).unwrap();
        let q = trace.len() / 4;
        let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let third = peak(&trace.positions[2 * q..3 * q]);
        let fourth = peak(&trace.positions[3 * q..]);
        assert!(
            (fourth - third).abs() < 0.05 * third,
            "{topology:?}: {third} vs {fourth}"
        );
    }
}

#[test]
fn quarter_ratio_single_period_has_two_ones() {
    let cfg = SimConfig::new(
        ResonatorParams::new(1.0, 0.05).unwrap(),
        0.25,
        FeedbackConfig::new(Topology::single(1).unwrap(), 0.01),
    );
    let trace = run(&cfg).unwrap();
    let p = pdo_core::detect_period(&trace.bits, 32).unwrap();
    assert_eq!(p.period, 4);
    assert_eq!(p.pattern.matches('1').count(), 2);
}
