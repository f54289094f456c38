//! Model and discretisation parameters.
//!
//! Units: detunings in GHz (ordinary frequency, no 2π), times in ns, jump
//! rates in 1/ns internally. Rates cross every external boundary in Hz; use
//! [`hz_to_per_ns`] / [`per_ns_to_hz`] at those boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hz → 1/ns.
pub fn hz_to_per_ns(rate_hz: f64) -> f64 {
    rate_hz * 1e-9
}

/// 1/ns → Hz.
pub fn per_ns_to_hz(rate_per_ns: f64) -> f64 {
    rate_per_ns * 1e9
}

/// Instantaneous parameters of the hybrid OU + Gaussian-jump detuning process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Mean detuning ω₀ (GHz).
    pub omega0: f64,
    /// Diffusion correlation time τ_sd (ns).
    pub tau_sd: f64,
    /// Diffusion strength S (GHz).
    pub diffusion: f64,
    /// Jump rate λ_J (1/ns).
    pub jump_rate: f64,
    /// Standard deviation of a single jump σ_J (GHz).
    pub jump_sigma: f64,
}

impl NoiseParams {
    /// Build from a jump rate given in Hz.
    pub fn new(omega0: f64, tau_sd: f64, diffusion: f64, jump_rate_hz: f64, jump_sigma: f64) -> Self {
        Self {
            omega0,
            tau_sd,
            diffusion,
            jump_rate: hz_to_per_ns(jump_rate_hz),
            jump_sigma,
        }
    }

    pub fn jump_rate_hz(&self) -> f64 {
        per_ns_to_hz(self.jump_rate)
    }

    /// Pure OU process, no jumps.
    pub fn ou(omega0: f64, tau_sd: f64, diffusion: f64) -> Self {
        Self {
            omega0,
            tau_sd,
            diffusion,
            jump_rate: 0.0,
            jump_sigma: 0.0,
        }
    }

    /// True when neither diffusion nor jumps can move the detuning.
    pub fn is_deterministic(&self) -> bool {
        self.diffusion == 0.0 && self.jump_rate * self.jump_sigma == 0.0
    }

    /// Checks the field ranges. A noiseless parameter set is rejected unless
    /// `allow_deterministic` is set.
    pub fn validate(&self, allow_deterministic: bool) -> Result<()> {
        let fields = [
            ("omega0", self.omega0),
            ("tau_sd", self.tau_sd),
            ("diffusion", self.diffusion),
            ("jump_rate", self.jump_rate),
            ("jump_sigma", self.jump_sigma),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.tau_sd <= 0.0 {
            return Err(Error::invalid(format!("tau_sd must be > 0 ns, got {}", self.tau_sd)));
        }
        if self.diffusion < 0.0 {
            return Err(Error::invalid(format!(
                "diffusion strength must be >= 0, got {}",
                self.diffusion
            )));
        }
        if self.jump_rate < 0.0 {
            return Err(Error::invalid(format!(
                "jump rate must be >= 0, got {}",
                self.jump_rate
            )));
        }
        if self.jump_sigma < 0.0 {
            return Err(Error::invalid(format!(
                "jump sigma must be >= 0, got {}",
                self.jump_sigma
            )));
        }
        if !allow_deterministic && self.is_deterministic() {
            return Err(Error::invalid(
                "parameters produce a deterministic trace (S = 0 and lambda_J*sigma_J = 0)",
            ));
        }
        Ok(())
    }
}

/// Time discretisation and ensemble size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    /// Time step (ns).
    pub dt: f64,
    /// Total simulated time (ns).
    pub window: f64,
    /// Number of trajectories.
    pub n_traj: usize,
    /// Reproducibility seed.
    pub seed: u64,
    /// Initial time excluded from statistics (ns).
    pub burn_in: f64,
}

impl Default for SimGrid {
    /// dt = 1 ps, a 10 ns window, 10⁵ trajectories and a 1 ns burn-in.
    fn default() -> Self {
        Self {
            dt: 1e-3,
            window: 10.0,
            n_traj: 100_000,
            seed: 0,
            burn_in: 1.0,
        }
    }
}

impl SimGrid {
    pub fn with_trajectories(mut self, n_traj: usize) -> Self {
        self.n_traj = n_traj;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0 ns, got {}", self.dt)));
        }
        if !(self.window.is_finite() && self.window >= 10.0 * self.dt) {
            return Err(Error::invalid(format!(
                "window must be at least 10*dt ({} ns), got {}",
                10.0 * self.dt,
                self.window
            )));
        }
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj must be >= 1"));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0 && self.burn_in < self.window) {
            return Err(Error::invalid(format!(
                "burn_in must lie in [0, window), got {}",
                self.burn_in
            )));
        }
        Ok(())
    }

    /// Samples per trajectory, floor(window/dt) + 1 (t = 0 included).
    pub fn samples_per_trajectory(&self) -> usize {
        (self.window / self.dt + 1e-9).floor() as usize + 1
    }

    /// Index of the first sample with t >= burn_in.
    pub fn first_stationary_index(&self) -> usize {
        (self.burn_in / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Post-burn-in samples per trajectory.
    pub fn stationary_samples_per_trajectory(&self) -> usize {
        self.samples_per_trajectory() - self.first_stationary_index()
    }

    pub fn total_samples(&self) -> u64 {
        self.n_traj as u64 * self.samples_per_trajectory() as u64
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }
}
