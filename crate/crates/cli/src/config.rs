//! TOML run configuration. Every section is optional; missing keys take the
//! documented defaults and unknown keys are rejected. Command-line flags
//! override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use specdiff::calibration::{Baseline, BroadeningLaw, CalibConfig, STRICT_TOLERANCE, TOLERANCE};
use specdiff::coherence::{DEFAULT_CURVE_TEMPS, DEFAULT_KAPPA, DEFAULT_REFERENCE_JUMP_VARIANCE};
use specdiff::lineshape::BinRule;
use specdiff::params::SimGrid;
use specdiff::sde::{JumpScheme, SimLimits};
use specdiff::Error;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub law: BroadeningLaw,
    pub baseline: BaselineSection,
    pub grid: GridSection,
    pub simplex: SimplexSection,
    pub emitter: EmitterSection,
    pub dephasing: DephasingSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    /// K.
    pub t0: f64,
    /// GHz; anchored when omitted.
    pub sigma0: Option<f64>,
    pub lambda_j0_hz: f64,
    /// GHz; anchored when omitted.
    pub sigma_j0: Option<f64>,
    /// ns.
    pub tau_sd: f64,
    /// GHz.
    pub omega0: f64,
    /// Temperature at which (1, 1, anchor_m_sigma_j) reproduces the law (K).
    pub anchor_t: f64,
    pub anchor_m_sigma_j: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = Baseline::default();
        Self {
            t0: b.t0,
            sigma0: None,
            lambda_j0_hz: b.lambda_j0_hz,
            sigma_j0: None,
            tau_sd: b.tau_sd,
            omega0: b.omega0,
            anchor_t: 20.0,
            anchor_m_sigma_j: 5.0,
        }
    }
}

impl BaselineSection {
    pub fn baseline(&self, law: &BroadeningLaw) -> Result<Baseline, Error> {
        let mut b = Baseline::anchored(
            law,
            self.t0,
            self.anchor_t,
            self.anchor_m_sigma_j,
            self.lambda_j0_hz,
            self.tau_sd,
        )?;
        b.omega0 = self.omega0;
        if let Some(s) = self.sigma0 {
            b.sigma0 = s;
        }
        if let Some(s) = self.sigma_j0 {
            b.sigma_j0 = s;
        }
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// ns.
    pub dt: f64,
    /// ns.
    pub window: f64,
    pub n_traj: usize,
    /// ns.
    pub burn_in: f64,
    pub scheme: JumpScheme,
    /// 0 selects the automatic rule.
    pub bins: usize,
    /// Cap on stored samples for trajectory dumps.
    pub max_samples: u64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = SimGrid::default();
        Self {
            dt: g.dt,
            window: g.window,
            n_traj: g.n_traj,
            burn_in: g.burn_in,
            scheme: JumpScheme::Bernoulli,
            bins: 0,
            max_samples: SimLimits::default().max_samples,
        }
    }
}

impl GridSection {
    pub fn sim_grid(&self, seed: u64) -> SimGrid {
        SimGrid {
            dt: self.dt,
            window: self.window,
            n_traj: self.n_traj,
            seed,
            burn_in: self.burn_in,
        }
    }

    pub fn bin_rule(&self) -> BinRule {
        if self.bins == 0 {
            BinRule::Auto
        } else {
            BinRule::Fixed(self.bins)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimplexSection {
    /// Temperatures used by `calibrate` without `--temps` and by `--inline`
    /// runs of the other commands (K).
    pub temps: Vec<f64>,
    pub search_points: usize,
    pub box_min: f64,
    pub box_max: f64,
    /// GHz.
    pub tolerance: f64,
    /// GHz, used under `--strict`.
    pub strict_tolerance: f64,
    pub max_evals: usize,
    /// Trajectories per Monte-Carlo evaluation.
    pub n_traj: usize,
    /// Tie-break weights for (m_sigma, m_lambda, m_sigmaJ).
    pub tie_weights: [f64; 3],
    /// GHz per unit weighted log distance.
    pub proximity_weight: f64,
}

impl Default for SimplexSection {
    fn default() -> Self {
        let c = CalibConfig::default();
        Self {
            temps: DEFAULT_CURVE_TEMPS.to_vec(),
            search_points: c.search_points,
            box_min: c.box_min,
            box_max: c.box_max,
            tolerance: TOLERANCE,
            strict_tolerance: STRICT_TOLERANCE,
            max_evals: c.max_evals,
            n_traj: c.sim.n_traj,
            tie_weights: c.tie_weights,
            proximity_weight: c.proximity_weight,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterSection {
    /// Radiative lifetime (ns); required by g2, crossover and scan.
    pub t1: Option<f64>,
    /// Intrinsic coherence time (ns); required by g2, crossover and scan.
    pub t2: Option<f64>,
    /// Rabi frequencies for `g2` (GHz).
    pub omega_r_ghz: Vec<f64>,
    /// Rabi frequencies for the decay sweeps of `crossover` (GHz).
    pub sweep_omega_r_ghz: Vec<f64>,
    /// Temperatures of the decay sweeps (K).
    pub sweep_temps: Vec<f64>,
    /// Fixed Rabi frequency for the g² column of `scan` (GHz).
    pub scan_omega_r_ghz: f64,
}

impl Default for EmitterSection {
    fn default() -> Self {
        Self {
            t1: None,
            t2: None,
            omega_r_ghz: vec![1.0, 2.0, 4.0],
            sweep_omega_r_ghz: vec![1.0, 1.5, 2.0, 3.0, 4.0],
            sweep_temps: vec![5.0, 20.0, 30.0],
            scan_omega_r_ghz: 4.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingSection {
    pub kappa: f64,
    /// Jump variance that maps to gamma_coeff = kappa when no calibration is
    /// loaded (GHz²).
    pub reference_jump_variance: f64,
    /// Optional (T_K, gamma_coeff) table that replaces the calibrated model.
    pub table: Option<Vec<[f64; 2]>>,
    /// Slope of decay rate against Rabi frequency that marks the crossover.
    pub target_slope: f64,
}

impl Default for DephasingSection {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            reference_jump_variance: DEFAULT_REFERENCE_JUMP_VARIANCE,
            table: None,
            target_slope: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
    /// Trajectories dumped by `simulate` (0 disables the dump).
    pub trajectories: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg: true,
            trajectories: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.law.validate()?;
        self.baseline.baseline(&self.law)?;
        self.grid.sim_grid(self.seed).validate()?;
        self.calib_config(false).validate()?;
        if let (Some(t1), Some(t2)) = (self.emitter.t1, self.emitter.t2) {
            specdiff::coherence::EmitterParams { t1, t2, omega_r: 0.0 }.validate()?;
        }
        let d = &self.dephasing;
        if !(d.kappa.is_finite() && d.kappa >= 0.0) {
            return Err(Error::InvalidInput("dephasing.kappa must be >= 0".into()));
        }
        if !(d.reference_jump_variance.is_finite() && d.reference_jump_variance > 0.0) {
            return Err(Error::InvalidInput(
                "dephasing.reference_jump_variance must be > 0".into(),
            ));
        }
        if !(d.target_slope.is_finite() && d.target_slope > 0.0) {
            return Err(Error::InvalidInput("dephasing.target_slope must be > 0".into()));
        }
        let rabi = self
            .emitter
            .omega_r_ghz
            .iter()
            .chain(&self.emitter.sweep_omega_r_ghz)
            .chain(std::iter::once(&self.emitter.scan_omega_r_ghz));
        for w in rabi {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "Rabi frequencies must be >= 0 GHz, got {w}"
                )));
            }
        }
        Ok(())
    }

    pub fn calib_config(&self, strict: bool) -> CalibConfig {
        let s = &self.simplex;
        CalibConfig {
            search_points: s.search_points,
            box_min: s.box_min,
            box_max: s.box_max,
            tolerance: if strict { s.strict_tolerance } else { s.tolerance },
            max_evals: s.max_evals,
            sim: SimGrid {
                n_traj: s.n_traj,
                ..self.grid.sim_grid(self.seed)
            },
            scheme: self.grid.scheme,
            bins: self.grid.bin_rule(),
            tie_weights: s.tie_weights,
            proximity_weight: s.proximity_weight,
        }
    }
}
