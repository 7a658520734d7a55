use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use udn_core::channel::{fading_second_moment, FadingParams, RicianMarginal};
use udn_core::geometry::{ActivityMode, NetworkSnapshot};
use udn_core::meanfield::{
    campbell_pathloss_sum, empirical_mf_measure, mean_pathloss_to_typical, FadingMarks, NetworkConfig,
    RadiusRegime, TxPolicy,
};

fn cfg(lambda_b: f64) -> NetworkConfig {
    NetworkConfig {
        lambda_b,
        lambda_u: 1.0,
        n_antennas: 1,
        alpha: 4.0,
        reception_radius: 10.0,
        regime: RadiusRegime::Finite,
        noise: 0.001,
        p_max: 1.0,
        p_c: 1.0,
    }
}

fn snapshots(cfg: &NetworkConfig, count: usize, seed: u64) -> Vec<NetworkSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| NetworkSnapshot::sample(&cfg.density(), ActivityMode::Thinning, &mut rng).unwrap())
        .collect()
}

fn stationary() -> RicianMarginal {
    RicianMarginal::stationary(&FadingParams { mu: [1.0, 1.0], eta: 1.0 })
}

#[test]
fn per_interferer_mean_follows_campbell() {
    // thinning at lambda_b = 30 leaves a nearly unbiased PPP of interferers on the ball
    let c = cfg(30.0);
    let snaps = snapshots(&c, 10_000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = empirical_mf_measure(&snaps, c.alpha, &FadingMarks::Rice(stationary()), &TxPolicy::Constant(1.0), &mut rng)
        .unwrap();
    let ball = c.lambda_u * std::f64::consts::PI * c.reception_radius.powi(2);
    let target = campbell_pathloss_sum(&c) / ball * fading_second_moment(&stationary());
    assert!((m.mean / target - 1.0).abs() < 0.02, "{} vs {target}", m.mean);
    // the printed tail factor undercounts the same quantity by a quarter
    let printed = mean_pathloss_to_typical(&c) / ball * fading_second_moment(&stationary());
    assert!(m.mean / printed > 1.25);
}

#[test]
fn standard_error_halves_with_four_times_the_snapshots() {
    let c = cfg(10.0);
    let marks = FadingMarks::Rice(stationary());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let small = empirical_mf_measure(&snapshots(&c, 250, 4), c.alpha, &marks, &TxPolicy::Constant(1.0), &mut rng).unwrap();
    let large = empirical_mf_measure(&snapshots(&c, 500, 5), c.alpha, &marks, &TxPolicy::Constant(1.0), &mut rng).unwrap();
    let ratio = large.std_error / small.std_error;
    assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn constant_power_unit_fading_is_exact() {
    let c = cfg(5.0);
    let snaps = snapshots(&c, 50, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = empirical_mf_measure(&snaps, c.alpha, &FadingMarks::Deterministic(1.0), &TxPolicy::Constant(0.8), &mut rng)
        .unwrap();
    let losses: Vec<f64> = snaps
        .iter()
        .flat_map(|s| s.interferers().map(|(_, z)| if z.norm() <= 1.0 { 1.0 } else { z.norm().powi(-4) }).collect::<Vec<_>>())
        .collect();
    let mean_l = losses.iter().sum::<f64>() / losses.len() as f64;
    assert_eq!(m.interferers, losses.len());
    assert!((m.mean - 0.8 * mean_l).abs() < 1e-14);
}

#[test]
fn independent_marks_factorize() {
    let c = cfg(10.0);
    let snaps = snapshots(&c, 2000, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = empirical_mf_measure(
        &snaps,
        c.alpha,
        &FadingMarks::Rice(stationary()),
        &TxPolicy::Uniform { low: 0.2, high: 1.0 },
        &mut rng,
    )
    .unwrap();
    assert!((m.mean - m.factorized_mean()).abs() < 3.0 * m.std_error + 1e-3 * m.mean);
    assert!((m.mean_power - 0.6).abs() < 0.01);
    assert!((m.mean_fading_power - 4.0).abs() < 0.05);
    let total: u64 = m.histogram.counts.iter().sum::<u64>() + m.histogram.underflow + m.histogram.overflow;
    assert_eq!(total as usize, m.interferers);
}
