//! Photon correlation g²(τ) of a driven two-level emitter under detuning
//! noise, decay-rate extraction and the coherent/overdamped crossover.
//!
//! With s = 1/T1 + 1/T2, a = s/2 and envelope rate Γ = (s + γ_sd+j)/2:
//!
//! ```text
//! oscillatory (Ω_R² > Var):  g² = 1 − e^{−Γ|τ|}·[cos(Ω_eff τ) + (a/Ω_eff)·sin(Ω_eff|τ|)]
//! critical    (Ω_R² = Var):  g² = 1 − e^{−Γ|τ|}·[1 + a|τ|]
//! overdamped  (Ω_R² < Var):  g² = 1 − e^{−Γ|τ|}·[cosh(κ'|τ|) + (a/κ')·sinh(κ'|τ|)]
//! ```
//!
//! where Ω_eff = √(Ω_R² − Var) and κ = √(Var − Ω_R²). Ω_R given in GHz is
//! multiplied by 2π and the variance (GHz²) by (2π)² so that both sides of the
//! subtraction are in (rad/ns)².
//!
//! The overdamped branch uses the saturated rate κ' = κ·c/√(c² + κ²) with
//! c = Γ/2 instead of κ. Plain continuation (κ' = κ) grows without bound once
//! κ exceeds Γ, which breaks g² → 1 and g² ≥ 0. With κ' < Γ/2 the slow decay
//! rate Γ − κ' never drops below Γ/2, 0 < 1 − g² ≤ 1 holds for every τ, the
//! small-κ behaviour is unchanged to O(κ³), and the branch joins the critical
//! form continuously at κ → 0.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::calibration::{BroadeningLaw, CalibrationResult};
use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::io::{csv_line, fmt_sig};
use crate::lineshape::{analytic_variance, jump_variance};
use crate::optim::bisect;
use crate::params::NoiseParams;

/// GHz → rad/ns.
pub fn ghz_to_rad_per_ns(f: f64) -> f64 {
    TAU * f
}

/// Emitter lifetimes and bare drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Radiative lifetime (ns).
    pub t1: f64,
    /// Intrinsic coherence time (ns).
    pub t2: f64,
    /// Bare Rabi frequency (rad/ns).
    pub omega_r: f64,
}

impl EmitterParams {
    /// Rabi frequency given in GHz.
    pub fn with_rabi_ghz(t1: f64, t2: f64, omega_r_ghz: f64) -> Self {
        Self {
            t1,
            t2,
            omega_r: ghz_to_rad_per_ns(omega_r_ghz),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(Error::invalid(format!("T1 must be > 0 ns, got {}", self.t1)));
        }
        if !(self.t2.is_finite() && self.t2 > 0.0 && self.t2 <= 2.0 * self.t1) {
            return Err(Error::invalid(format!("T2 must lie in (0, 2*T1], got {}", self.t2)));
        }
        if !(self.omega_r.is_finite() && self.omega_r >= 0.0) {
            return Err(Error::invalid(format!(
                "Rabi frequency must be >= 0, got {}",
                self.omega_r
            )));
        }
        Ok(())
    }

    /// 1/T1 + 1/T2 (1/ns).
    pub fn intrinsic_rate(&self) -> f64 {
        1.0 / self.t1 + 1.0 / self.t2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Oscillatory,
    Critical,
    Overdamped,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Oscillatory => "oscillatory",
            Regime::Critical => "critical",
            Regime::Overdamped => "overdamped",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ω_eff as a magnitude plus branch: real for oscillatory, imaginary for
/// overdamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRabi {
    /// |Ω_eff| (rad/ns).
    pub magnitude: f64,
    pub regime: Regime,
}

impl EffectiveRabi {
    pub fn real(omega: f64) -> Self {
        Self {
            magnitude: omega.abs(),
            regime: if omega == 0.0 {
                Regime::Critical
            } else {
                Regime::Oscillatory
            },
        }
    }

    pub fn imaginary(kappa: f64) -> Self {
        Self {
            magnitude: kappa.abs(),
            regime: if kappa == 0.0 {
                Regime::Critical
            } else {
                Regime::Overdamped
            },
        }
    }
}

/// Units of the variance handed to [`effective_rabi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VarianceUnits {
    /// GHz², converted with (2π)².
    #[default]
    GhzSquared,
    /// Already in (rad/ns)².
    RadPerNsSquared,
}

/// √(Ω_R² − Var) with the regime decided by the exact sign of the difference.
pub fn effective_rabi(omega_r: f64, variance: f64, units: VarianceUnits) -> EffectiveRabi {
    let var = match units {
        VarianceUnits::GhzSquared => variance * TAU * TAU,
        VarianceUnits::RadPerNsSquared => variance,
    };
    let o2 = omega_r * omega_r;
    if o2 > var {
        EffectiveRabi::real((o2 - var).sqrt())
    } else if o2 < var {
        EffectiveRabi::imaginary((var - o2).sqrt())
    } else {
        EffectiveRabi::imaginary(0.0)
    }
}

/// Envelope rate Γ = (1/T1 + 1/T2 + γ)/2 (1/ns).
pub fn envelope_rate(emitter: &EmitterParams, gamma_sdj: f64) -> f64 {
    0.5 * (emitter.intrinsic_rate() + gamma_sdj)
}

/// Saturated overdamped rate κ·c/√(c² + κ²), c = Γ/2.
fn saturated_kappa(kappa: f64, gamma: f64) -> f64 {
    let c = 0.5 * gamma;
    if kappa == 0.0 {
        0.0
    } else {
        kappa * c / c.hypot(kappa)
    }
}

/// Slowest decay rate of |1 − g²| (1/ns).
pub fn slow_rate(emitter: &EmitterParams, gamma_sdj: f64, omega_eff: EffectiveRabi) -> f64 {
    let g = envelope_rate(emitter, gamma_sdj);
    match omega_eff.regime {
        Regime::Overdamped => g - saturated_kappa(omega_eff.magnitude, g),
        _ => g,
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// 1 − g²(τ).
pub fn one_minus_g2(tau: f64, emitter: &EmitterParams, gamma_sdj: f64, omega_eff: EffectiveRabi) -> f64 {
    let t = tau.abs();
    let a = 0.5 * emitter.intrinsic_rate();
    let g = envelope_rate(emitter, gamma_sdj);
    let w = omega_eff.magnitude;
    match omega_eff.regime {
        _ if w == 0.0 => (-g * t).exp() * (1.0 + a * t),
        Regime::Oscillatory | Regime::Critical => (-g * t).exp() * ((w * tau).cos() + a * t * sinc(w * t)),
        Regime::Overdamped => {
            let k = saturated_kappa(w, g);
            let slow = (-(g - k) * t).exp();
            let fast = (-(g + k) * t).exp();
            let cosh_part = 0.5 * (slow + fast);
            let sinh_part = if k * t < 1e-4 {
                (-g * t).exp() * t * (1.0 + (k * t).powi(2) / 6.0)
            } else {
                0.5 * (slow - fast) / k
            };
            cosh_part + a * sinh_part
        }
    }
}

/// g²(τ) for the given effective drive and extra dephasing rate.
pub fn g2(tau: f64, emitter: &EmitterParams, gamma_sdj: f64, omega_eff: EffectiveRabi) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    1.0 - one_minus_g2(tau, emitter, gamma_sdj, omega_eff)
}

/// Evaluated correlation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Trace {
    /// ns.
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub regime: Regime,
    pub emitter: EmitterParams,
    /// 1/ns.
    pub gamma_sdj: f64,
    pub omega_eff: EffectiveRabi,
    /// Γ = (1/T1 + 1/T2 + γ)/2 (1/ns).
    pub envelope_rate: f64,
    /// Stationary detuning variance used for Ω_eff (GHz²).
    pub variance: f64,
}

impl G2Trace {
    /// Evaluate on `tau`, which must contain 0.
    pub fn evaluate(
        tau: &[f64],
        emitter: &EmitterParams,
        gamma_sdj: f64,
        omega_eff: EffectiveRabi,
        variance: f64,
    ) -> Result<Self> {
        emitter.validate()?;
        if !(gamma_sdj.is_finite() && gamma_sdj >= 0.0) {
            return Err(Error::invalid(format!("dephasing rate must be >= 0, got {gamma_sdj}")));
        }
        if !tau.contains(&0.0) {
            return Err(Error::invalid("tau grid must include 0"));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("tau grid must be finite"));
        }
        Ok(Self {
            g2: tau.iter().map(|&t| g2(t, emitter, gamma_sdj, omega_eff)).collect(),
            tau: tau.to_vec(),
            regime: omega_eff.regime,
            emitter: *emitter,
            gamma_sdj,
            omega_eff,
            envelope_rate: envelope_rate(emitter, gamma_sdj),
            variance,
        })
    }

    /// CSV with header `tau_ns,g2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"tau_ns,g2\n")?;
        for (t, g) in self.tau.iter().zip(&self.g2) {
            w.write_all(csv_line([fmt_sig(*t), fmt_sig(*g)]).as_bytes())?;
        }
        Ok(())
    }
}

/// Largest automatic grid.
const MAX_AUTO_POINTS: usize = 200_001;

/// Non-negative τ grid starting at 0 that spans at least eight slow decay
/// constants (and two oscillation periods when oscillatory) at ≥ 50 points
/// per period and ≥ 20 per envelope time.
pub fn auto_tau_grid(emitter: &EmitterParams, gamma_sdj: f64, omega_eff: EffectiveRabi) -> Vec<f64> {
    let g = envelope_rate(emitter, gamma_sdj);
    let slow = slow_rate(emitter, gamma_sdj, omega_eff);
    let mut t_max = 8.0 / slow;
    let mut dt = 1.0 / (20.0 * g);
    if omega_eff.regime == Regime::Oscillatory && omega_eff.magnitude > 0.0 {
        let period = TAU / omega_eff.magnitude;
        t_max = t_max.max(3.5 * PI / omega_eff.magnitude).min(25.0 / g);
        dt = dt.min(period / 50.0);
    }
    let n = ((t_max / dt).ceil() as usize + 1).min(MAX_AUTO_POINTS);
    let step = t_max / (n - 1) as f64;
    (0..n).map(|i| i as f64 * step).collect()
}

/// Dephasing coefficient γ_sd+j/Ω_R as a function of temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingModel {
    gamma: Pchip,
    variance: Option<Pchip>,
    /// Scale κ and reference jump variance when built from a calibration.
    scale: Option<(f64, f64)>,
}

/// Reference temperature for the calibrated dephasing scale (K).
pub const DEPHASING_REFERENCE_T: f64 = 30.0;

/// κ anchored once with [`anchor_kappa`] so that the default calibration
/// (default baseline and settings, seed 0, [`DEFAULT_CURVE_TEMPS`]) crosses
/// at [`ANCHOR_T_CRIT`]. A reproduction anchor, not a prediction.
pub const DEFAULT_KAPPA: f64 = 3.62165;

/// Jump variance of the default calibration at [`DEPHASING_REFERENCE_T`]
/// (GHz²), used by [`gamma_coeff_scaled`] when no calibration is at hand.
pub const DEFAULT_REFERENCE_JUMP_VARIANCE: f64 = 0.508951;

/// κ·J(params)/J_ref for an explicit scale.
pub fn gamma_coeff_scaled(params: &NoiseParams, kappa: f64, j_ref: f64) -> f64 {
    kappa * jump_variance(params) / j_ref
}

/// Temperatures of the default calibrated curve (K).
pub const DEFAULT_CURVE_TEMPS: [f64; 8] = [5.0, 10.0, 15.0, 20.0, 22.5, 25.0, 27.5, 30.0];

/// Target critical temperature used as the κ anchor (K).
pub const ANCHOR_T_CRIT: f64 = 25.91;

impl DephasingModel {
    /// User table of (T, γ/Ω_R) points; values must be ≥ 0 and non-decreasing.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        let (t, g): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if g.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("dephasing coefficients must be >= 0"));
        }
        if g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("dephasing coefficients must be non-decreasing in T"));
        }
        Ok(Self {
            gamma: Pchip::new(&t, &g)?,
            variance: None,
            scale: None,
        })
    }

    /// γ/Ω_R(T) = κ·J(T)/J(T_ref), with J the jump part of the stationary
    /// variance of each calibrated parameter set and T_ref =
    /// [`DEPHASING_REFERENCE_T`] (interpolated when it is not a node).
    pub fn from_calibration(curve: &[CalibrationResult], kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::invalid(format!("kappa must be >= 0, got {kappa}")));
        }
        let t: Vec<f64> = curve.iter().map(|r| r.multipliers.t).collect();
        let j: Vec<f64> = curve.iter().map(|r| jump_variance(&r.params)).collect();
        let v: Vec<f64> = curve.iter().map(|r| analytic_variance(&r.params)).collect();
        let j_interp = Pchip::new(&t, &j)?;
        let (lo, hi) = j_interp.domain();
        if !(lo..=hi).contains(&DEPHASING_REFERENCE_T) {
            return Err(Error::invalid(format!(
                "calibrated curve [{lo}, {hi}] K must include the {DEPHASING_REFERENCE_T} K reference"
            )));
        }
        let j_ref = j_interp.eval(DEPHASING_REFERENCE_T);
        if j_ref <= 0.0 {
            return Err(Error::invalid("reference jump variance is zero"));
        }
        let g: Vec<f64> = j.iter().map(|x| kappa * x / j_ref).collect();
        // Calibrated multipliers are monotone so J is too; guard against
        // round-off making the table dip.
        let g_mono: Vec<f64> = g
            .iter()
            .scan(0.0f64, |m, &x| {
                *m = m.max(x);
                Some(*m)
            })
            .collect();
        Ok(Self {
            gamma: Pchip::new(&t, &g_mono)?,
            variance: Some(Pchip::new(&t, &v)?),
            scale: Some((kappa, j_ref)),
        })
    }

    pub fn gamma_coeff(&self, t: f64) -> f64 {
        self.gamma.eval(t).max(0.0)
    }

    /// Coefficient for arbitrary noise parameters, κ·J(params)/J_ref. Only
    /// available for calibration-based models.
    pub fn gamma_coeff_for(&self, params: &NoiseParams) -> Option<f64> {
        self.scale.map(|(k, j_ref)| gamma_coeff_scaled(params, k, j_ref))
    }

    pub fn kappa(&self) -> Option<f64> {
        self.scale.map(|s| s.0)
    }

    /// Interpolated stationary variance at `t` (GHz²) for calibration-based
    /// models.
    pub fn variance(&self, t: f64) -> Option<f64> {
        self.variance.as_ref().map(|v| v.eval(t))
    }

    pub fn domain(&self) -> (f64, f64) {
        self.gamma.domain()
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        self.gamma.nodes()
    }
}

/// g² at temperature `t` with the variance of `calibrated` and
/// γ_sd+j = gamma_coeff(t)·Ω_R. Uses [`auto_tau_grid`] when `tau` is `None`.
pub fn g2_trace(
    t: f64,
    emitter: &EmitterParams,
    calibrated: &NoiseParams,
    model: &DephasingModel,
    tau: Option<&[f64]>,
) -> Result<G2Trace> {
    emitter.validate()?;
    calibrated.validate(true)?;
    let variance = analytic_variance(calibrated);
    let gamma = model.gamma_coeff(t) * emitter.omega_r;
    trace_for(emitter, variance, gamma, tau)
}

/// g² for an explicit variance (GHz²) and dephasing rate (1/ns).
pub fn trace_for(emitter: &EmitterParams, variance: f64, gamma_sdj: f64, tau: Option<&[f64]>) -> Result<G2Trace> {
    let omega_eff = effective_rabi(emitter.omega_r, variance, VarianceUnits::GhzSquared);
    match tau {
        Some(grid) => G2Trace::evaluate(grid, emitter, gamma_sdj, omega_eff, variance),
        None => {
            emitter.validate()?;
            let grid = auto_tau_grid(emitter, gamma_sdj, omega_eff);
            G2Trace::evaluate(&grid, emitter, gamma_sdj, omega_eff, variance)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    /// Log-linear fit through the local maxima of |1 − g²|.
    Peaks,
    /// Log-linear fit of the tail τ ≥ 1/Γ.
    Tail,
}

/// Decay rate of one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// rad/ns.
    pub omega_r: f64,
    /// 1/ns.
    pub decay_rate: f64,
    pub fit_r2: f64,
    pub regime: Regime,
    pub method: FitMethod,
}

/// Ordinary least squares y = a + b·x; returns (a, b, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (intercept, slope, r2)
}

/// Points of |1 − g²| at or below this fraction of the peak are treated as
/// round-off.
const ENVELOPE_FLOOR: f64 = 1e-11;
pub const MIN_R2: f64 = 0.9;

/// Fit |1 − g²| ∝ exp(−Γ_decay·τ) on τ > 0. Oscillatory traces with at least
/// two interior maxima use the maxima (refined by a parabola in log space);
/// other traces use the tail τ ≥ 1/Γ.
pub fn extract_decay_rate(trace: &G2Trace) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = trace
        .tau
        .iter()
        .zip(&trace.g2)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, g)| (*t, (1.0 - g).abs()))
        .collect::<Vec<_>>();
    let mut pts = pts;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 5 {
        return Err(Error::InsufficientData("need at least five tau > 0 points".into()));
    }
    let floor = ENVELOPE_FLOOR * pts.iter().map(|p| p.1).fold(0.0, f64::max);

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..pts.len() - 1 {
        let (y0, y1, y2) = (pts[i - 1].1, pts[i].1, pts[i + 1].1);
        if y1 > y0 && y1 >= y2 && y1 > floor && y0 > 0.0 && y2 > 0.0 {
            let (l0, l1, l2) = (y0.ln(), y1.ln(), y2.ln());
            let (t0, t1, t2) = (pts[i - 1].0, pts[i].0, pts[i + 1].0);
            // Vertex of the parabola through the three log values (uniform
            // spacing assumed locally; fall back to the sample otherwise).
            let h = t1 - t0;
            let denom = l0 - 2.0 * l1 + l2;
            if ((t2 - t1) - h).abs() < 1e-9 * h && denom < 0.0 {
                let off = 0.5 * (l0 - l2) / denom;
                peaks.push((t1 + off * h, l1 - 0.25 * (l0 - l2) * off));
            } else {
                peaks.push((t1, l1));
            }
        }
    }

    let (method, xs, ys) = if trace.regime == Regime::Oscillatory && peaks.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = peaks.into_iter().unzip();
        (FitMethod::Peaks, x, y)
    } else {
        let start = 1.0 / trace.envelope_rate;
        let (x, y): (Vec<f64>, Vec<f64>) = pts
            .iter()
            .filter(|(t, y)| *t >= start && *y > floor)
            .map(|(t, y)| (*t, y.ln()))
            .unzip();
        (FitMethod::Tail, x, y)
    };
    if xs.len() < 2 {
        return Err(Error::InsufficientData("trace too short for an envelope fit".into()));
    }
    let (_, slope, r2) = linear_fit(&xs, &ys);
    let fit = DecayFit {
        omega_r: trace.emitter.omega_r,
        decay_rate: -slope,
        fit_r2: r2,
        regime: trace.regime,
        method,
    };
    let span = pts[pts.len() - 1].0;
    if fit.decay_rate > 0.0 && span * fit.decay_rate < 3.0 {
        return Err(Error::InsufficientData(format!(
            "trace spans {:.2} decay constants, need at least 3",
            span * fit.decay_rate
        )));
    }
    // NaN fails both checks.
    if r2.is_nan() || r2 < MIN_R2 || fit.decay_rate.is_nan() || fit.decay_rate <= 0.0 {
        return Err(Error::PoorFit { fit });
    }
    Ok(fit)
}

/// Decay rates over a set of Rabi frequencies (rad/ns) with
/// γ_sd+j = coeff·Ω_R and a fixed stationary variance (GHz²).
pub fn decay_sweep(t1: f64, t2: f64, omega_rs: &[f64], variance: f64, coeff: f64) -> Result<Vec<DecayFit>> {
    omega_rs
        .iter()
        .map(|&w| {
            let emitter = EmitterParams { t1, t2, omega_r: w };
            let trace = trace_for(&emitter, variance, coeff * w, None)?;
            extract_decay_rate(&trace)
        })
        .collect()
}

/// Slope, intercept and R² of Γ_decay against Ω_R.
pub fn decay_slope(fits: &[DecayFit]) -> Result<(f64, f64, f64)> {
    if fits.len() < 2 {
        return Err(Error::InsufficientData("slope needs at least two decay fits".into()));
    }
    let x: Vec<f64> = fits.iter().map(|f| f.omega_r).collect();
    let y: Vec<f64> = fits.iter().map(|f| f.decay_rate).collect();
    let (intercept, slope, r2) = linear_fit(&x, &y);
    Ok((slope, intercept, r2))
}

/// CSV with header `omegaR_radns,decay_rate_perns,r2,regime`.
pub fn write_decay_csv<W: Write>(mut w: W, fits: &[DecayFit]) -> Result<()> {
    w.write_all(b"omegaR_radns,decay_rate_perns,r2,regime\n")?;
    for f in fits {
        w.write_all(
            csv_line([
                fmt_sig(f.omega_r),
                fmt_sig(f.decay_rate),
                fmt_sig(f.fit_r2),
                f.regime.as_str().to_string(),
            ])
            .as_bytes(),
        )?;
    }
    Ok(())
}

/// Root-finding settings for [`crossover_temperature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverCriterion {
    /// Γ_decay-vs-Ω_R slope marking the crossover.
    pub target_slope: f64,
    pub rel_tol: f64,
}

impl Default for CrossoverCriterion {
    fn default() -> Self {
        Self {
            target_slope: 1.0,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Temperature where gamma_coeff reaches 2·slope (K).
    pub t_root: f64,
    /// Calibrated linewidth at `t_root` (GHz).
    pub fwhm: f64,
    /// `fwhm` mapped back through the broadening law (K).
    pub t_crit: f64,
    /// True when the criterion holds over the whole range.
    pub degenerate: bool,
}

/// Temperature at which the decay-vs-drive slope gamma_coeff/2 reaches the
/// target. The root of the interpolated coefficient is located by bisection;
/// the calibrated FWHM there is mapped to temperature through `law`.
pub fn crossover_temperature(
    model: &DephasingModel,
    curve: &[CalibrationResult],
    law: &BroadeningLaw,
    criterion: &CrossoverCriterion,
) -> Result<Crossover> {
    let target = 2.0 * criterion.target_slope;
    let (lo, hi) = model.domain();
    let f = |t: f64| model.gamma_coeff(t) - target;
    let (f_lo, f_hi) = (f(lo), f(hi));
    let (t_root, degenerate) = if f_lo == 0.0 {
        let flat = model.nodes().1.iter().all(|g| *g == target);
        if flat {
            log::warn!("dephasing coefficient equals the criterion over the whole range; returning the lower edge");
        }
        (lo, flat)
    } else {
        match bisect(f, lo, hi, criterion.rel_tol) {
            Some(r) => (r, false),
            None => {
                let (_, g) = model.nodes();
                let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let _ = f_hi;
                return Err(Error::NoCrossover {
                    min_slope: min / 2.0,
                    max_slope: max / 2.0,
                    target: criterion.target_slope,
                });
            }
        }
    };
    let fwhm = calibrated_fwhm_at(curve, t_root)?;
    let t_crit = law
        .temperature_for(fwhm)
        .ok_or_else(|| Error::invalid(format!("linewidth {fwhm} GHz is below the law's floor")))?;
    Ok(Crossover {
        t_root,
        fwhm,
        t_crit,
        degenerate,
    })
}

/// Monotone interpolation of the achieved FWHM over a calibrated curve.
pub fn calibrated_fwhm_at(curve: &[CalibrationResult], t: f64) -> Result<f64> {
    match curve {
        [] => Err(Error::invalid("calibrated curve is empty")),
        [only] => Ok(only.achieved_fwhm),
        _ => {
            let ts: Vec<f64> = curve.iter().map(|r| r.multipliers.t).collect();
            let fw: Vec<f64> = curve.iter().map(|r| r.achieved_fwhm).collect();
            Ok(Pchip::new(&ts, &fw)?.eval(t))
        }
    }
}

/// κ for which the calibration-based model crosses at `t_crit`.
pub fn anchor_kappa(
    curve: &[CalibrationResult],
    law: &BroadeningLaw,
    t_crit: f64,
    criterion: &CrossoverCriterion,
) -> Result<f64> {
    let unit = DephasingModel::from_calibration(curve, 1.0)?;
    let (lo, hi) = unit.domain();
    // Temperature on the curve whose mapped linewidth gives t_crit.
    let mapped = |t: f64| -> f64 {
        calibrated_fwhm_at(curve, t)
            .ok()
            .and_then(|fw| law.temperature_for(fw))
            .unwrap_or(f64::NEG_INFINITY)
            - t_crit
    };
    let t_root = bisect(mapped, lo, hi, 1e-12)
        .ok_or_else(|| Error::invalid(format!("{t_crit} K is not reachable on the calibrated curve")))?;
    let g = unit.gamma_coeff(t_root);
    if g <= 0.0 {
        return Err(Error::invalid("jump variance vanishes at the anchor temperature"));
    }
    Ok(2.0 * criterion.target_slope / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{apply_multipliers, Baseline, MultiplierSet};
    use crate::lineshape::analytic_fwhm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn emitter(w: f64) -> EmitterParams {
        EmitterParams {
            t1: 2.0,
            t2: 1.0,
            omega_r: w,
        }
    }

    #[test]
    fn effective_rabi_examples() {
        let e = effective_rabi(3.0, 0.0, VarianceUnits::GhzSquared);
        assert_eq!(e.magnitude, 3.0);
        assert_eq!(e.regime, Regime::Oscillatory);
        let e = effective_rabi(2.0, 3.0, VarianceUnits::RadPerNsSquared);
        assert_relative_eq!(e.magnitude, 1.0, epsilon = 1e-15);
        let e = effective_rabi(2.0, 4.0, VarianceUnits::RadPerNsSquared);
        assert_eq!(e, EffectiveRabi::imaginary(0.0));
        assert_eq!(e.regime, Regime::Critical);
        let e = effective_rabi(TAU, 1.0, VarianceUnits::GhzSquared);
        assert_eq!(e.regime, Regime::Critical);
        let e = effective_rabi(1.0, 1.0, VarianceUnits::GhzSquared);
        assert_eq!(e.regime, Regime::Overdamped);
    }

    #[test]
    fn hand_point() {
        let v = g2(1.0, &emitter(PI), 0.0, EffectiveRabi::real(PI));
        // 1 − e^{−0.75}·[cos π + (1.5/(2π))·sin π] = 1 + e^{−0.75}
        assert!((v - 1.472_366_552_741_015).abs() < 1e-6, "{v}");
        assert!((v - (1.0 + (-0.75f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_and_long_delay() {
        for om in [
            EffectiveRabi::real(3.0),
            EffectiveRabi::imaginary(0.0),
            EffectiveRabi::imaginary(50.0),
        ] {
            assert_eq!(g2(0.0, &emitter(3.0), 0.4, om), 0.0);
            assert!((g2(200.0, &emitter(3.0), 0.4, om) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn continuity_at_the_critical_point() {
        let e = emitter(1.0);
        for tau in [0.1, 0.7, 2.5, 6.0] {
            let c = g2(tau, &e, 0.3, EffectiveRabi::imaginary(0.0));
            let o = g2(tau, &e, 0.3, EffectiveRabi::real(1e-7));
            let d = g2(tau, &e, 0.3, EffectiveRabi::imaginary(1e-7));
            assert!((c - o).abs() < 1e-9 && (c - d).abs() < 1e-9);
        }
    }

    #[test]
    fn undriven_trace_relaxes_monotonically() {
        let tr = trace_for(&emitter(0.0), 0.0, 0.0, None).unwrap();
        assert_eq!(tr.regime, Regime::Critical);
        assert!(tr.g2.windows(2).all(|w| w[1] >= w[0]));
        assert!(tr.g2.iter().all(|g| *g <= 1.0));
    }

    #[test]
    fn tau_grid_must_contain_zero() {
        assert!(G2Trace::evaluate(&[0.5, 1.0], &emitter(1.0), 0.0, EffectiveRabi::real(1.0), 0.0).is_err());
    }

    #[test]
    fn noise_free_decay_is_intrinsic() {
        for w in [2.0, 5.0, 20.0] {
            let tr = trace_for(&emitter(w), 0.0, 0.0, None).unwrap();
            let fit = extract_decay_rate(&tr).unwrap();
            assert_eq!(fit.method, FitMethod::Peaks);
            assert!((fit.decay_rate - 0.75).abs() < 0.02 * 0.75, "{}", fit.decay_rate);
        }
    }

    #[test]
    fn linear_dephasing_gives_half_slope() {
        let c = 0.3;
        let omegas: Vec<f64> = (0..6).map(|i| 2.0 * 10f64.powf(i as f64 / 5.0)).collect();
        let fits = decay_sweep(2.0, 1.0, &omegas, 0.0, c).unwrap();
        let (slope, intercept, r2) = decay_slope(&fits).unwrap();
        assert!((slope - c / 2.0).abs() < 0.03 * c / 2.0);
        assert!((intercept - 0.75).abs() < 0.02);
        assert!(r2 > 0.99);
    }

    #[test]
    fn overdamped_tail_fit() {
        let e = emitter(1.0);
        let tr = trace_for(&e, 1.0, 0.5, None).unwrap();
        assert_eq!(tr.regime, Regime::Overdamped);
        let fit = extract_decay_rate(&tr).unwrap();
        assert_eq!(fit.method, FitMethod::Tail);
        let expect = slow_rate(&e, 0.5, tr.omega_eff);
        assert!((fit.decay_rate - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn short_trace_is_rejected() {
        let tau: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let tr = trace_for(&emitter(3.0), 0.0, 0.0, Some(&tau)).unwrap();
        assert!(extract_decay_rate(&tr).is_err());
    }

    fn synthetic_curve(temps: &[f64]) -> Vec<CalibrationResult> {
        let base = Baseline::default();
        let law = BroadeningLaw::default();
        temps
            .iter()
            .map(|&t| {
                // Closed-form solution with jumps carrying the growth.
                let v = (law.fwhm(t) / crate::lineshape::FWHM_PER_SIGMA).powi(2);
                let d = base.sigma0 * base.sigma0 / 4.0;
                let k = jump_variance(&base.params());
                let m = MultiplierSet {
                    t,
                    m_sigma: 1.0,
                    m_lambda: 1.0,
                    m_sigma_j: ((v - d) / k).sqrt(),
                };
                let params = apply_multipliers(&base, &m);
                let fw = analytic_fwhm(&params);
                CalibrationResult {
                    multipliers: m,
                    params,
                    target_fwhm: law.fwhm(t),
                    achieved_fwhm: fw,
                    analytic_fwhm: fw,
                    residual: fw - law.fwhm(t),
                    evaluations: 0,
                    surrogate_evaluations: 0,
                }
            })
            .collect()
    }

    #[test]
    fn anchored_kappa_reproduces_the_anchor() {
        let law = BroadeningLaw::default();
        let curve = synthetic_curve(&DEFAULT_CURVE_TEMPS);
        let crit = CrossoverCriterion::default();
        let kappa = anchor_kappa(&curve, &law, ANCHOR_T_CRIT, &crit).unwrap();
        let model = DephasingModel::from_calibration(&curve, kappa).unwrap();
        let c = crossover_temperature(&model, &curve, &law, &crit).unwrap();
        assert!((c.t_crit - ANCHOR_T_CRIT).abs() < 0.01, "{c:?}");
        assert!(model.gamma_coeff(5.0) < 0.2);
    }

    #[test]
    fn flat_and_unbracketed_tables() {
        let law = BroadeningLaw::default();
        let curve = synthetic_curve(&[5.0, 20.0, 30.0]);
        let crit = CrossoverCriterion::default();
        let flat = DephasingModel::from_table(&[(5.0, 2.0), (30.0, 2.0)]).unwrap();
        let c = crossover_temperature(&flat, &curve, &law, &crit).unwrap();
        assert!(c.degenerate && c.t_root == 5.0);
        let low = DephasingModel::from_table(&[(5.0, 0.0), (30.0, 1.5)]).unwrap();
        assert!(matches!(
            crossover_temperature(&low, &curve, &law, &crit),
            Err(Error::NoCrossover { .. })
        ));
        assert!(DephasingModel::from_table(&[(5.0, 1.0), (30.0, 0.5)]).is_err());
    }

    proptest! {
        #[test]
        fn g2_is_bounded_and_tends_to_one(
            t1 in 0.1f64..5.0, r in 0.05f64..2.0, w in 0.0f64..40.0,
            var in 0.0f64..5.0, gamma in 0.0f64..30.0, tau in -50.0f64..50.0,
        ) {
            let e = EmitterParams { t1, t2: r * t1, omega_r: w };
            let om = effective_rabi(w, var, VarianceUnits::GhzSquared);
            let v = g2(tau, &e, gamma, om);
            prop_assert!(v.is_finite());
            prop_assert!(v >= -1e-12);
            prop_assert!(v <= 2.0);
            if om.regime != Regime::Oscillatory {
                prop_assert!(v <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn regime_matches_sign(w in 0.0f64..20.0, var in 0.0f64..10.0) {
            let om = effective_rabi(w, var, VarianceUnits::GhzSquared);
            let d = w * w - var * TAU * TAU;
            let expect = if d > 0.0 { Regime::Oscillatory } else if d < 0.0 { Regime::Overdamped } else { Regime::Critical };
            prop_assert_eq!(om.regime, expect);
        }

        #[test]
        fn overdamped_damping_is_monotone_in_gamma(
            w in 0.0f64..3.0, var in 1.0f64..4.0, g1 in 0.0f64..20.0, dg in 0.0f64..20.0, tau in 0.01f64..20.0,
        ) {
            let e = EmitterParams { t1: 1.0, t2: 1.0, omega_r: w };
            let om = effective_rabi(w, var, VarianceUnits::GhzSquared);
            prop_assume!(om.regime == Regime::Overdamped);
            let a = one_minus_g2(tau, &e, g1, om).abs();
            let b = one_minus_g2(tau, &e, g1 + dg, om).abs();
            prop_assert!(b <= a * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn crossover_is_stable_under_refinement(extra in prop::collection::vec(5.5f64..29.5, 0..6)) {
            let law = BroadeningLaw::default();
            let crit = CrossoverCriterion::default();
            let base_curve = synthetic_curve(&DEFAULT_CURVE_TEMPS);
            let kappa = anchor_kappa(&base_curve, &law, ANCHOR_T_CRIT, &crit).unwrap();
            let reference = crossover_temperature(
                &DephasingModel::from_calibration(&base_curve, kappa).unwrap(), &base_curve, &law, &crit,
            ).unwrap();
            let mut temps: Vec<f64> = DEFAULT_CURVE_TEMPS.iter().chain(&extra).copied().collect();
            temps.sort_by(f64::total_cmp);
            temps.dedup_by(|a, b| (*a - *b).abs() < 0.05);
            let curve = synthetic_curve(&temps);
            let c = crossover_temperature(&DephasingModel::from_calibration(&curve, kappa).unwrap(), &curve, &law, &crit).unwrap();
            prop_assert!((c.t_crit - reference.t_crit).abs() < 0.05);
        }
    }
}
