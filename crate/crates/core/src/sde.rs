//! Euler–Maruyama integration of the hybrid OU + Gaussian-jump detuning process
//!
//! ```text
//! ω[i+1] = ω[i] − (ω[i] − ω₀)/τ_sd · dt + S·√(1/(2τ_sd))·ξ[i]·√dt + J[i]
//! ```
//!
//! with ξ ~ N(0, 1) and J a Gaussian jump N(0, σ_J²) emitted by one of two
//! samplers:
//!
//! * [`JumpScheme::Bernoulli`]: a jump fires in a step with probability λ_J·dt.
//! * [`JumpScheme::Hazard`]: the hazard λ_J·dt accumulates step by step until it
//!   crosses a unit-mean exponential threshold; the jump then fires, the hazard
//!   resets to zero and a fresh threshold is drawn. This is exact Poisson
//!   thinning as dt → 0 and gives the same long-run rate as the Bernoulli
//!   scheme.
//!
//! Each trajectory starts at ω₀. Random draws per step happen in a fixed
//! order (diffusion noise, then the jump decision, then the jump amplitude) so
//! a trajectory is a pure function of `(params, grid, scheme, seed, index)`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_line, fmt_sig};
use crate::params::{NoiseParams, SimGrid};
use crate::rng::trajectory_rng;

/// λ_J·dt above which the per-step Bernoulli approximation gets a warning.
pub const RATE_DT_WARN: f64 = 0.1;
/// λ_J·dt above which a step can no longer represent the jump rate.
pub const RATE_DT_MAX: f64 = 1.0;

/// Trajectories handled by one work item. Fixed so reductions are independent
/// of the number of workers.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpScheme {
    #[default]
    Bernoulli,
    Hazard,
}

impl std::str::FromStr for JumpScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(JumpScheme::Bernoulli),
            "hazard" => Ok(JumpScheme::Hazard),
            other => Err(Error::invalid(format!(
                "unknown jump scheme '{other}' (expected bernoulli|hazard)"
            ))),
        }
    }
}

/// One explicit Euler–Maruyama step. `noise` is a standard-normal draw and
/// `jump` the jump amplitude for this step, if any.
pub fn step(omega: f64, params: &NoiseParams, dt: f64, noise: f64, jump: Option<f64>) -> Result<f64> {
    let jump_v = jump.unwrap_or(0.0);
    if !(omega.is_finite() && dt.is_finite() && noise.is_finite() && jump_v.is_finite()) {
        return Err(Error::invalid("step inputs must be finite"));
    }
    if dt <= 0.0 {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    params.validate(true)?;
    let amp = diffusion_amplitude(params);
    Ok(advance(
        omega,
        params.omega0,
        params.tau_sd,
        amp,
        dt,
        dt.sqrt(),
        noise,
        jump_v,
    ))
}

/// S·√(1/(2τ_sd)).
fn diffusion_amplitude(params: &NoiseParams) -> f64 {
    params.diffusion * (1.0 / (2.0 * params.tau_sd)).sqrt()
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn advance(omega: f64, omega0: f64, tau: f64, amp: f64, dt: f64, sqrt_dt: f64, noise: f64, jump: f64) -> f64 {
    omega - (omega - omega0) / tau * dt + amp * noise * sqrt_dt + jump
}

/// Validates λ_J·dt for either jump scheme.
pub fn check_jump_step(params: &NoiseParams, dt: f64) -> Result<()> {
    let rate_dt = params.jump_rate * dt;
    if rate_dt > RATE_DT_MAX {
        return Err(Error::TimeStepTooCoarse { rate_dt });
    }
    if rate_dt > RATE_DT_WARN {
        log::warn!("lambda_J*dt = {rate_dt:.3} > {RATE_DT_WARN}: jump statistics are biased at this step size");
    }
    Ok(())
}

/// Bernoulli jump sampler: with probability λ_J·dt return a N(0, σ_J²) draw.
pub fn sample_jump_bernoulli<R: Rng + ?Sized>(params: &NoiseParams, dt: f64, rng: &mut R) -> Result<Option<f64>> {
    check_jump_step(params, dt)?;
    Ok(bernoulli_jump(params.jump_rate * dt, params.jump_sigma, rng))
}

#[inline(always)]
fn bernoulli_jump<R: Rng + ?Sized>(p: f64, sigma_j: f64, rng: &mut R) -> Option<f64> {
    if p > 0.0 && rng.random::<f64>() < p {
        let z: f64 = rng.sample(StandardNormal);
        Some(sigma_j * z)
    } else {
        None
    }
}

/// Accumulated-hazard state for [`sample_jump_hazard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardState {
    /// Hazard accumulated since the last jump (dimensionless).
    pub accumulated: f64,
    /// Current unit-mean exponential threshold.
    pub threshold: f64,
}

impl HazardState {
    /// Fresh state at the start of a trajectory.
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            accumulated: 0.0,
            threshold: rng.sample(Exp1),
        }
    }

    /// Sum and number of the jumps that fire while adding `hazard`. The
    /// overshoot past each threshold carries into the next waiting time, so
    /// event times follow the continuous-time Poisson process exactly.
    #[inline(always)]
    fn advance<R: Rng + ?Sized>(&mut self, hazard: f64, sigma_j: f64, rng: &mut R) -> (f64, u32) {
        if hazard <= 0.0 {
            return (0.0, 0);
        }
        self.accumulated += hazard;
        let mut sum = 0.0;
        let mut count = 0;
        while self.accumulated >= self.threshold {
            let z: f64 = rng.sample(StandardNormal);
            sum += sigma_j * z;
            count += 1;
            self.accumulated -= self.threshold;
            self.threshold = rng.sample(Exp1);
        }
        (sum, count)
    }
}

/// Accumulated-hazard jump sampler. Adds λ_J·dt to the running hazard and
/// fires each time it crosses an exponential threshold; several jumps in one
/// step are summed.
pub fn sample_jump_hazard<R: Rng + ?Sized>(
    params: &NoiseParams,
    dt: f64,
    state: &mut HazardState,
    rng: &mut R,
) -> Result<Option<f64>> {
    check_jump_step(params, dt)?;
    let (sum, count) = state.advance(params.jump_rate * dt, params.jump_sigma, rng);
    Ok((count > 0).then_some(sum))
}

/// Integrate trajectory `index` into `out` (resized to the grid length).
/// Returns the number of jump events.
fn integrate(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme, index: u64, out: &mut Vec<f64>) -> u64 {
    let n = grid.samples_per_trajectory();
    out.clear();
    out.resize(n, 0.0);
    let mut rng = trajectory_rng(grid.seed, index);
    let dt = grid.dt;
    let amp = diffusion_amplitude(params);
    let omega0 = params.omega0;
    // Same update as `step`, with the constant factors hoisted.
    let relax = dt / params.tau_sd;
    let kick = amp * dt.sqrt();
    let p = params.jump_rate * dt;
    let sigma_j = params.jump_sigma;
    let mut hazard = match scheme {
        JumpScheme::Hazard => Some(HazardState::new(&mut rng)),
        JumpScheme::Bernoulli => None,
    };

    let mut omega = omega0;
    let mut jumps = 0u64;
    out[0] = omega;
    for slot in out[1..].iter_mut() {
        let noise: f64 = if amp != 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        let j = match hazard.as_mut() {
            None => match bernoulli_jump(p, sigma_j, &mut rng) {
                Some(v) => {
                    jumps += 1;
                    v
                }
                None => 0.0,
            },
            Some(h) => {
                let (v, k) = h.advance(p, sigma_j, &mut rng);
                jumps += u64::from(k);
                v
            }
        };
        omega = omega - (omega - omega0) * relax + kick * noise + j;
        *slot = omega;
    }
    jumps
}

fn validate_run(params: &NoiseParams, grid: &SimGrid) -> Result<()> {
    params.validate(true)?;
    grid.validate()?;
    check_jump_step(params, grid.dt)?;
    if grid.dt > params.tau_sd / 10.0 {
        log::warn!(
            "dt = {} ns is coarser than tau_sd/10 = {} ns; the Euler-Maruyama variance is inflated by 2/(2 - dt/tau_sd)",
            grid.dt,
            params.tau_sd / 10.0
        );
    }
    Ok(())
}

/// Stream every trajectory through a fold without storing the ensemble.
///
/// `visit(acc, index, samples, jump_count)` sees the full trajectory
/// (including burn-in). Partial accumulators are built per fixed-size chunk of
/// trajectory indices and merged in index order with `merge`, so the result
/// does not depend on the number of worker threads.
pub fn fold_trajectories<A, I, V, M>(
    params: &NoiseParams,
    grid: &SimGrid,
    scheme: JumpScheme,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, usize, &[f64], u64) + Sync,
    M: Fn(&mut A, A),
{
    validate_run(params, grid)?;
    let n_chunks = grid.n_traj.div_ceil(CHUNK);
    let run_chunk = |c: usize| {
        let mut acc = init();
        let mut buf = Vec::with_capacity(grid.samples_per_trajectory());
        let end = ((c + 1) * CHUNK).min(grid.n_traj);
        for i in c * CHUNK..end {
            let jumps = integrate(params, grid, scheme, i as u64, &mut buf);
            visit(&mut acc, i, &buf, jumps);
        }
        acc
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<A> = {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(run_chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<A> = (0..n_chunks).map(run_chunk).collect();

    let mut parts = partials.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Limits for materialised ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimLimits {
    /// Maximum number of stored samples (n_traj × samples per trajectory).
    pub max_samples: u64,
}

impl Default for SimLimits {
    fn default() -> Self {
        // 200 MB of f64 samples.
        Self {
            max_samples: 25_000_000,
        }
    }
}

/// A materialised, immutable ensemble of detuning trajectories.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub grid: SimGrid,
    pub params: NoiseParams,
    pub scheme: JumpScheme,
    /// Row-major samples, `grid.samples_per_trajectory()` per trajectory (GHz).
    samples: Vec<f64>,
    /// Jump events per trajectory over the whole window.
    pub jump_counts: Vec<u64>,
}

impl TrajectoryEnsemble {
    pub fn n_traj(&self) -> usize {
        self.jump_counts.len()
    }

    pub fn samples_per_trajectory(&self) -> usize {
        self.grid.samples_per_trajectory()
    }

    pub fn trajectory(&self, i: usize) -> &[f64] {
        let n = self.samples_per_trajectory();
        &self.samples[i * n..(i + 1) * n]
    }

    /// Post-burn-in part of trajectory `i`.
    pub fn stationary(&self, i: usize) -> &[f64] {
        &self.trajectory(i)[self.grid.first_stationary_index()..]
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.samples_per_trajectory())
    }

    /// All post-burn-in samples of all trajectories.
    pub fn pooled_stationary(&self) -> impl Iterator<Item = f64> + '_ {
        let skip = self.grid.first_stationary_index();
        self.trajectories().flat_map(move |t| t[skip..].iter().copied())
    }

    /// Ensemble mean of ω(t) at sample index `k`.
    pub fn mean_at(&self, k: usize) -> f64 {
        self.trajectories().map(|t| t[k]).sum::<f64>() / self.n_traj() as f64
    }

    /// Write selected trajectories as CSV (`t_ns,omega_GHz,traj_id`).
    pub fn write_csv<W: Write>(&self, mut w: W, traj_ids: &[usize]) -> Result<()> {
        w.write_all(b"t_ns,omega_GHz,traj_id\n")?;
        for &id in traj_ids {
            if id >= self.n_traj() {
                return Err(Error::invalid(format!("trajectory {id} out of range")));
            }
            for (k, &v) in self.trajectory(id).iter().enumerate() {
                let line = csv_line([fmt_sig(self.grid.time_of(k)), fmt_sig(v), id.to_string()]);
                w.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }
}

/// Simulate and store a full ensemble under the default memory cap.
pub fn simulate_ensemble(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme) -> Result<TrajectoryEnsemble> {
    simulate_ensemble_with(params, grid, scheme, SimLimits::default())
}

pub fn simulate_ensemble_with(
    params: &NoiseParams,
    grid: &SimGrid,
    scheme: JumpScheme,
    limits: SimLimits,
) -> Result<TrajectoryEnsemble> {
    validate_run(params, grid)?;
    let requested = grid.total_samples();
    if requested > limits.max_samples {
        return Err(Error::ResourceLimit {
            requested,
            cap: limits.max_samples,
        });
    }
    type Part = (Vec<f64>, Vec<u64>);
    let (samples, jump_counts) = fold_trajectories(
        params,
        grid,
        scheme,
        || -> Part { (Vec::new(), Vec::new()) },
        |acc, _, traj, jumps| {
            acc.0.extend_from_slice(traj);
            acc.1.push(jumps);
        },
        |acc, part| {
            acc.0.extend(part.0);
            acc.1.extend(part.1);
        },
    )?;
    Ok(TrajectoryEnsemble {
        grid: *grid,
        params: *params,
        scheme,
        samples,
        jump_counts,
    })
}

/// Per-trajectory jump counts without storing samples.
pub fn jump_counts(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme) -> Result<Vec<u64>> {
    fold_trajectories(
        params,
        grid,
        scheme,
        Vec::new,
        |acc, _, _, jumps| acc.push(jumps),
        |acc, part| acc.extend(part),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    fn params(s: f64, tau: f64, rate: f64, sj: f64) -> NoiseParams {
        NoiseParams {
            omega0: 0.0,
            tau_sd: tau,
            diffusion: s,
            jump_rate: rate,
            jump_sigma: sj,
        }
    }

    #[test]
    fn step_fixed_point_at_mean() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        let p = NoiseParams { omega0: 3.25, ..p };
        assert_eq!(step(3.25, &p, 1e-3, 0.0, None).unwrap(), 3.25);
    }

    #[test]
    fn step_pure_relaxation() {
        let p = NoiseParams {
            omega0: 2.0,
            ..params(0.0, 0.5, 0.0, 0.0)
        };
        let w = step(3.0, &p, 0.05, 0.7, None).unwrap();
        assert_relative_eq!(w, 2.9, epsilon = 1e-12);
    }

    #[test]
    fn step_noise_term() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        let w = step(0.0, &p, 1e-3, 1.0, None).unwrap();
        assert_relative_eq!(w, 0.0316227766, epsilon = 1e-10);
        let w = step(0.0, &p, 1e-3, 0.0, Some(0.25)).unwrap();
        assert_relative_eq!(w, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn step_rejects_non_finite() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        assert!(step(f64::NAN, &p, 1e-3, 0.0, None).is_err());
        assert!(step(0.0, &p, 1e-3, f64::INFINITY, None).is_err());
        assert!(step(0.0, &p, 1e-3, 0.0, Some(f64::NAN)).is_err());
    }

    #[test]
    fn bernoulli_zero_rate_never_jumps() {
        let p = params(1.0, 0.5, 0.0, 1.0);
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        for _ in 0..10_000 {
            assert!(sample_jump_bernoulli(&p, 1e-3, &mut rng).unwrap().is_none());
        }
    }

    #[test]
    fn bernoulli_zero_amplitude_jumps_are_zero() {
        let p = params(1.0, 0.5, 50.0, 0.0);
        let mut rng = Pcg64Mcg::seed_from_u64(2);
        let mut fired = 0;
        for _ in 0..10_000 {
            if let Some(j) = sample_jump_bernoulli(&p, 1e-3, &mut rng).unwrap() {
                assert_eq!(j, 0.0);
                fired += 1;
            }
        }
        assert!(fired > 0);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = params(1.0, 0.5, 2000.0, 1.0);
        let mut rng = Pcg64Mcg::seed_from_u64(3);
        assert!(matches!(
            sample_jump_bernoulli(&p, 1e-3, &mut rng),
            Err(Error::TimeStepTooCoarse { .. })
        ));
        let mut st = HazardState::new(&mut rng);
        assert!(sample_jump_hazard(&p, 1e-3, &mut st, &mut rng).is_err());
        let grid = SimGrid::default().with_trajectories(1);
        assert!(simulate_ensemble(&p, &grid, JumpScheme::Bernoulli).is_err());
    }

    #[test]
    fn hazard_zero_rate_never_accumulates() {
        let p = params(1.0, 0.5, 0.0, 1.0);
        let mut rng = Pcg64Mcg::seed_from_u64(4);
        let mut st = HazardState::new(&mut rng);
        for _ in 0..10_000 {
            assert!(sample_jump_hazard(&p, 1e-3, &mut st, &mut rng).unwrap().is_none());
        }
        assert_eq!(st.accumulated, 0.0);
    }

    #[test]
    fn hazard_inter_jump_times_match_exponential_oracle() {
        // λ = 1/ns: 1e5 inter-jump intervals from the hazard sampler against
        // 1e5 direct Exp(1) draws; both means must sit within 1% of 1 ns.
        let p = params(0.0, 0.5, 1.0, 1.0);
        let dt = 1e-3;
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        let mut st = HazardState::new(&mut rng);
        let (mut events, mut steps_since, mut total_time) = (0usize, 0u64, 0.0);
        while events < 100_000 {
            steps_since += 1;
            if sample_jump_hazard(&p, dt, &mut st, &mut rng).unwrap().is_some() {
                total_time += steps_since as f64 * dt;
                steps_since = 0;
                events += 1;
            }
        }
        let hazard_mean = total_time / events as f64;

        let mut oracle_rng = Pcg64Mcg::seed_from_u64(6);
        let direct_mean = (0..100_000).map(|_| oracle_rng.sample::<f64, _>(Exp1)).sum::<f64>() / 1e5;

        assert!((hazard_mean - 1.0).abs() < 0.01, "hazard mean {hazard_mean}");
        assert!((direct_mean - 1.0).abs() < 0.01, "oracle mean {direct_mean}");
    }

    #[test]
    fn noiseless_ensemble_stays_at_mean() {
        let p = NoiseParams {
            omega0: 1.5,
            ..params(0.0, 0.5, 0.0, 0.0)
        };
        let grid = SimGrid::default().with_trajectories(3);
        let e = simulate_ensemble(&p, &grid, JumpScheme::Bernoulli).unwrap();
        assert!(e.trajectories().all(|t| t.iter().all(|&w| w == 1.5)));
        assert!(e.jump_counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn ensemble_shape_and_determinism() {
        let p = params(1.0, 0.5, 2.0, 0.5);
        let grid = SimGrid {
            window: 2.0,
            burn_in: 0.5,
            ..SimGrid::default()
        }
        .with_trajectories(130)
        .with_seed(11);
        let a = simulate_ensemble(&p, &grid, JumpScheme::Hazard).unwrap();
        let b = simulate_ensemble(&p, &grid, JumpScheme::Hazard).unwrap();
        assert_eq!(a.n_traj(), 130);
        assert_eq!(a.trajectory(0).len(), 2001);
        assert!(a.trajectories().all(|t| t[0] == 0.0));
        for (x, y) in a.trajectories().zip(b.trajectories()) {
            assert!(x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
        assert_eq!(a.jump_counts, b.jump_counts);

        let c = simulate_ensemble(&p, &grid.with_seed(12), JumpScheme::Hazard).unwrap();
        assert_ne!(a.trajectory(5), c.trajectory(5));
    }

    #[test]
    fn memory_cap_is_enforced() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        let grid = SimGrid::default().with_trajectories(100);
        let err =
            simulate_ensemble_with(&p, &grid, JumpScheme::Bernoulli, SimLimits { max_samples: 1000 }).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn bernoulli_jump_count_matches_poisson_mean() {
        // λ·window = 10 expected events; 10⁴ trajectories.
        let p = params(0.0, 0.5, 1.0, 1.0);
        let grid = SimGrid::default().with_trajectories(10_000).with_seed(3);
        let counts = jump_counts(&p, &grid, JumpScheme::Bernoulli).unwrap();
        let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
        assert!((mean - 10.0).abs() < 3.0 * (10.0f64 / 1e4).sqrt(), "mean {mean}");
    }

    #[test]
    fn hazard_and_bernoulli_counts_agree() {
        let p = params(0.0, 0.5, 1.0, 1.0);
        let grid = SimGrid::default().with_trajectories(10_000).with_seed(9);
        let stats = |c: &[u64]| {
            let n = c.len() as f64;
            let m = c.iter().sum::<u64>() as f64 / n;
            let v = c.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, v / n)
        };
        let (mb, vb) = stats(&jump_counts(&p, &grid, JumpScheme::Bernoulli).unwrap());
        let (mh, vh) = stats(&jump_counts(&p, &grid, JumpScheme::Hazard).unwrap());
        assert!((mb - mh).abs() < 3.0 * (vb + vh).sqrt(), "{mb} vs {mh}");
    }

    #[test]
    fn hazard_count_is_unbiased_at_coarse_steps() {
        // λ·dt = 0.2: dropping the threshold overshoot would lose ~10% of
        // the events. Poisson oracle: mean λT with variance λT.
        let p = params(0.0, 0.5, 200.0, 1.0);
        let grid = SimGrid {
            dt: 1e-3,
            window: 1.0,
            burn_in: 0.0,
            n_traj: 4_000,
            seed: 12,
        };
        let c = jump_counts(&p, &grid, JumpScheme::Hazard).unwrap();
        let mean = c.iter().sum::<u64>() as f64 / c.len() as f64;
        let expected = 200.0 * grid.dt * (grid.samples_per_trajectory() - 1) as f64;
        let se = (expected / c.len() as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} vs {expected}");
    }

    #[test]
    fn trajectory_csv_format() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        let grid = SimGrid {
            dt: 0.1,
            window: 1.0,
            burn_in: 0.0,
            ..SimGrid::default()
        }
        .with_trajectories(2);
        let e = simulate_ensemble(&p, &grid, JumpScheme::Bernoulli).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf, &[1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t_ns,omega_GHz,traj_id"));
        assert_eq!(lines.next(), Some("0,0,1"));
        assert_eq!(text.lines().count(), 12);
        assert!(e.write_csv(Vec::new(), &[2]).is_err());
    }
}
