use specdiff::lineshape::{analytic_variance, build_histogram, discrete_variance, measure, stream_summary, BinRule};
use specdiff::params::{NoiseParams, SimGrid};
use specdiff::sde::{simulate_ensemble, JumpScheme};

fn rel(a: f64, b: f64) -> f64 {
    (a - b) / b
}

#[test]
fn coarse_step_variance_follows_the_discrete_recursion() {
    // dt/τ = 0.1 separates the two closed forms by 5%.
    // Oracle: AR(1) variance q/(1 − ρ²) with ρ = 1 − dt/τ, q = S²dt/(2τ).
    let p = NoiseParams::ou(0.0, 0.5, 1.0);
    let dt = 0.05;
    let rho: f64 = 1.0 - dt / p.tau_sd;
    let q = p.diffusion * p.diffusion * dt / (2.0 * p.tau_sd);
    let oracle = q / (1.0 - rho * rho);
    assert!((discrete_variance(&p, dt) - oracle).abs() < 1e-12);

    let grid = SimGrid {
        dt,
        window: 100.0,
        n_traj: 4_000,
        seed: 1,
        burn_in: 5.0,
    };
    let v = stream_summary(&p, &grid, JumpScheme::Bernoulli)
        .unwrap()
        .moments()
        .variance;
    assert!(rel(v, oracle).abs() < 0.01, "{v} vs {oracle}");
    assert!(rel(v, analytic_variance(&p)) > 0.03);
}

#[test]
fn lag_covariance_decays_geometrically() {
    let p = NoiseParams::ou(0.0, 0.2, 1.0);
    let grid = SimGrid {
        dt: 0.01,
        window: 4.0,
        n_traj: 4_000,
        seed: 2,
        burn_in: 2.0,
    };
    let ens = simulate_ensemble(&p, &grid, JumpScheme::Bernoulli).unwrap();
    let (k0, lag) = (250, 20);
    let (mut c0, mut cl) = (0.0, 0.0);
    for t in ens.trajectories() {
        c0 += t[k0] * t[k0];
        cl += t[k0] * t[k0 + lag];
    }
    let ratio = cl / c0;
    // Oracle: ρ^lag of the AR(1) recursion.
    let oracle = (1.0f64 - grid.dt / p.tau_sd).powi(lag as i32);
    assert!((ratio - oracle).abs() < 0.03, "{ratio} vs {oracle}");
}

#[test]
fn jump_only_variance() {
    // Oracle: compound-Poisson shot noise λσ²τ/(2 − dt/τ) on the grid.
    let p = NoiseParams::new(0.0, 0.5, 0.0, 5e9, 0.4);
    let grid = SimGrid::default().with_trajectories(4_000).with_seed(3);
    let v = stream_summary(&p, &grid, JumpScheme::Bernoulli)
        .unwrap()
        .moments()
        .variance;
    let oracle = p.jump_rate * 0.16 * 0.5 / (2.0 - grid.dt / p.tau_sd);
    assert!(rel(v, oracle).abs() < 0.03, "{v} vs {oracle}");
}

#[test]
fn schemes_give_the_same_line() {
    let p = NoiseParams::new(0.0, 0.5, 0.8, 2e10, 0.05);
    let grid = SimGrid::default().with_trajectories(3_000).with_seed(4);
    let b = stream_summary(&p, &grid, JumpScheme::Bernoulli)
        .unwrap()
        .moments()
        .variance;
    let h = stream_summary(&p, &grid, JumpScheme::Hazard)
        .unwrap()
        .moments()
        .variance;
    assert!(rel(b, h).abs() < 0.02, "{b} vs {h}");
}

#[test]
fn streaming_and_stored_histograms_agree() {
    let p = NoiseParams::new(0.2, 0.5, 0.9, 1e10, 0.1);
    let grid = SimGrid::default().with_trajectories(200).with_seed(5);
    let streamed = measure(&p, &grid, JumpScheme::Hazard, BinRule::Fixed(80)).unwrap();
    let stored = build_histogram(
        &simulate_ensemble(&p, &grid, JumpScheme::Hazard).unwrap(),
        BinRule::Fixed(80),
    )
    .unwrap();
    assert_eq!(streamed.histogram.counts, stored.counts);
    assert_eq!(streamed.histogram.edges, stored.edges);
}

#[cfg(feature = "parallel")]
#[test]
fn results_do_not_depend_on_thread_count() {
    let p = NoiseParams::new(0.0, 0.5, 0.9, 1e10, 0.1);
    let grid = SimGrid::default().with_trajectories(300).with_seed(6);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| measure(&p, &grid, JumpScheme::Bernoulli, BinRule::Auto).unwrap())
    };
    assert_eq!(run(1), run(3));
}
