use thiserror::Error;

use crate::calibration::CalibrationResult;
use crate::coherence::DecayFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time step too coarse: lambda_J*dt = {rate_dt:.4} exceeds 1")]
    TimeStepTooCoarse { rate_dt: f64 },

    #[error(
        "ensemble of {requested} samples exceeds the in-memory cap of {cap}; \
         use the streaming statistics path (lineshape::measure) instead"
    )]
    ResourceLimit { requested: u64, cap: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(
        "Gaussian fit did not converge after {iterations} iterations (moment fallback fwhm = {fallback_fwhm:.6} GHz)"
    )]
    FitFailure { iterations: usize, fallback_fwhm: f64 },

    #[error(
        "calibration at T = {t} K failed: best residual {residual:.4} GHz exceeds tolerance {tolerance:.4} GHz",
        t = best.multipliers.t,
        residual = best.residual
    )]
    CalibrationFailure {
        best: Box<CalibrationResult>,
        tolerance: f64,
        /// Temperatures that calibrated successfully before the failure.
        completed: Vec<CalibrationResult>,
    },

    #[error("decay-rate fit is poor (R^2 = {:.4})", fit.fit_r2)]
    PoorFit { fit: DecayFit },

    #[error("no crossover: slope ranges over [{min_slope:.4}, {max_slope:.4}] and never reaches {target}")]
    NoCrossover {
        min_slope: f64,
        max_slope: f64,
        target: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
