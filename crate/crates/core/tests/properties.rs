use proptest::prelude::*;
use specdiff::coherence::{effective_rabi, g2, EffectiveRabi, EmitterParams, Regime, VarianceUnits};
use specdiff::io::fmt_sig;
use specdiff::lineshape::{analytic_variance, fit_gaussian, histogram_from_samples, BinRule, MomentSums};
use specdiff::params::NoiseParams;
use specdiff::sde::step;

/// Box–Muller on a golden-ratio lattice: deterministic, evenly spread
/// normal samples.
fn normal_samples(n: usize, mu: f64, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let phi = 0.618_033_988_749_895;
    for i in 0..n / 2 {
        let u1 = (i as f64 + 0.5) / (n / 2) as f64;
        let u2 = (i as f64 * phi).fract();
        let r = (-2.0 * u1.ln()).sqrt();
        out.push(mu + sigma * r * (std::f64::consts::TAU * u2).cos());
        out.push(mu + sigma * r * (std::f64::consts::TAU * u2).sin());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_step_relaxes_toward_the_mean(
        omega in -5.0f64..5.0, omega0 in -2.0f64..2.0, tau in 0.05f64..5.0, dt in 1e-4f64..1e-2,
    ) {
        let p = NoiseParams::ou(omega0, tau, 1.0);
        let next = step(omega, &p, dt, 0.0, None).unwrap();
        let expected = omega0 + (omega - omega0) * (1.0 - dt / tau);
        prop_assert!((next - expected).abs() < 1e-12 * (1.0 + omega.abs()));
    }

    #[test]
    fn variance_scales_quadratically(
        s in 0.01f64..2.0, sj in 0.0f64..2.0, rate in 1e5f64..1e10, tau in 0.01f64..2.0, c in 0.1f64..10.0,
    ) {
        let p = NoiseParams::new(0.0, tau, s, rate, sj);
        let q = NoiseParams::new(0.0, tau, c * s, rate, c * sj);
        let r = analytic_variance(&q) / analytic_variance(&p);
        prop_assert!((r - c * c).abs() < 1e-9 * c * c);
    }

    #[test]
    fn histogram_is_a_density(seed in 0u64..1000, n in 1000usize..5000, bins in 1usize..200) {
        let xs: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 1009) as f64 / 97.0).collect();
        let h = histogram_from_samples(&xs, BinRule::Fixed(bins)).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), n as u64);
        prop_assert!(h.edges.windows(2).all(|w| w[1] > w[0]));
        let mass: f64 = h.densities().iter().map(|d| d * h.bin_width()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_fit_recovers_width(mu in -3.0f64..3.0, sigma in 0.05f64..3.0) {
        let xs = normal_samples(40_000, mu, sigma);
        let fit = fit_gaussian(&histogram_from_samples(&xs, BinRule::Auto).unwrap()).unwrap();
        prop_assert!((fit.sigma_fit / sigma - 1.0).abs() < 0.03, "{} vs {}", fit.sigma_fit, sigma);
        prop_assert!((fit.mu - mu).abs() < 0.03 * sigma);
    }

    #[test]
    fn merged_moments_match_pooled(a in prop::collection::vec(-10.0f64..10.0, 2..200),
                                   b in prop::collection::vec(-10.0f64..10.0, 2..200)) {
        let mut left = MomentSums::new(0.5);
        left.extend(&a);
        let mut right = MomentSums::new(0.5);
        right.extend(&b);
        left.merge(&right);
        let mut all = MomentSums::new(0.5);
        all.extend(&a);
        all.extend(&b);
        let (x, y) = (left.moments(), all.moments());
        prop_assert_eq!(x.count, y.count);
        prop_assert!((x.mean - y.mean).abs() < 1e-9);
        prop_assert!((x.variance - y.variance).abs() < 1e-9 * (1.0 + y.variance));
    }

    #[test]
    fn g2_is_even_in_tau(t1 in 0.2f64..5.0, ratio in 0.1f64..2.0, gamma in 0.0f64..10.0,
                         w in 0.0f64..30.0, over in any::<bool>(), tau in 0.0f64..20.0) {
        let em = EmitterParams { t1, t2: ratio * t1, omega_r: 1.0 };
        let eff = if over { EffectiveRabi::imaginary(w) } else { EffectiveRabi::real(w) };
        prop_assert_eq!(g2(tau, &em, gamma, eff), g2(-tau, &em, gamma, eff));
    }

    #[test]
    fn regime_follows_drive_against_spread(omega_r in 0.0f64..50.0, var in 0.0f64..5.0) {
        let e = effective_rabi(omega_r, var, VarianceUnits::GhzSquared);
        let spread = std::f64::consts::TAU * var.sqrt();
        match e.regime {
            Regime::Oscillatory => prop_assert!(omega_r > spread * (1.0 - 1e-12)),
            Regime::Overdamped | Regime::Critical => prop_assert!(omega_r <= spread * (1.0 + 1e-12)),
        }
    }

    #[test]
    fn formatted_numbers_round_trip(x in -1e12f64..1e12) {
        let y: f64 = fmt_sig(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300));
    }
}
