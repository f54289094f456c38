//! Hybrid Ornstein–Uhlenbeck plus Gaussian-jump model of emitter detuning
//! noise.
//!
//! * [`sde`]: Euler–Maruyama ensembles with Bernoulli or hazard jump sampling.
//! * [`lineshape`]: histograms, Gaussian fits, moments, closed-form variance.
//! * [`calibration`]: multipliers that reproduce Γ(T) = A + B·T³.
//! * [`coherence`]: g²(τ), decay-rate extraction and the crossover
//!   temperature.
//!
//! Detunings are ordinary frequencies in GHz, times in ns, jump rates in 1/ns
//! internally and Hz at the edges.

pub mod calibration;
pub mod coherence;
pub mod error;
pub mod interp;
pub mod io;
pub mod lineshape;
pub mod optim;
pub mod params;
pub mod rng;
pub mod sde;
pub mod svg;

pub use calibration::{
    apply_multipliers, calibrate, calibrate_curve, target_fwhm, Baseline, BroadeningLaw, CalibConfig,
    CalibrationResult, MultiplierSet,
};
pub use coherence::{
    crossover_temperature, effective_rabi, extract_decay_rate, g2, g2_trace, DecayFit, DephasingModel, EmitterParams,
    G2Trace, Regime,
};
pub use error::{Error, Result};
pub use lineshape::{
    analytic_variance, build_histogram, compare_ou_vs_hybrid, fit_gaussian, GaussianFit, Histogram, LineShape,
};
pub use params::{NoiseParams, SimGrid};
pub use sde::{simulate_ensemble, step, JumpScheme, TrajectoryEnsemble};
