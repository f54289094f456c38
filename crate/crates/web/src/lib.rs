//! Browser bindings. Each export returns a JSON string; the plain functions
//! underneath are ordinary Rust so they can be tested natively.

use serde::Serialize;
use specdiff::calibration::{read_csv, CalibrationResult};
use specdiff::coherence::{
    crossover_temperature, extract_decay_rate, ghz_to_rad_per_ns, trace_for, CrossoverCriterion, DephasingModel,
    EmitterParams, DEFAULT_KAPPA,
};
use specdiff::interp::Pchip;
use specdiff::lineshape::{analytic_fwhm, measure, BinRule};
use specdiff::{apply_multipliers, Baseline, BroadeningLaw, JumpScheme, MultiplierSet, NoiseParams, SimGrid};
use wasm_bindgen::prelude::*;

/// Default calibrated curve, identical to the one `specdiff calibrate` writes
/// with the shipped configuration.
const CURVE_CSV: &str = include_str!("../data/calibration_default.csv");

/// Most points sent back for one g² trace.
const MAX_PLOT_POINTS: usize = 1500;

/// Largest ensemble the page may request.
const MAX_TRAJ: usize = 20_000;

struct Curve {
    rows: Vec<CalibrationResult>,
    multipliers: [Pchip; 3],
    model: DephasingModel,
    base: Baseline,
}

impl Curve {
    fn load() -> Result<Self, String> {
        let base = Baseline::default();
        let rows = read_csv(CURVE_CSV, &base).map_err(|e| e.to_string())?;
        let t: Vec<f64> = rows.iter().map(|r| r.multipliers.t).collect();
        let col = |k: usize| {
            let y: Vec<f64> = rows.iter().map(|r| r.multipliers.as_array()[k]).collect();
            Pchip::new(&t, &y).map_err(|e| e.to_string())
        };
        let multipliers = [col(0)?, col(1)?, col(2)?];
        let model = DephasingModel::from_calibration(&rows, DEFAULT_KAPPA).map_err(|e| e.to_string())?;
        Ok(Self {
            rows,
            multipliers,
            model,
            base,
        })
    }

    fn check(&self, t: f64) -> Result<(), String> {
        let (lo, hi) = self.model.domain();
        if !(lo..=hi).contains(&t) {
            return Err(format!(
                "temperature {t} K is outside the calibrated range [{lo}, {hi}] K"
            ));
        }
        Ok(())
    }

    fn params_at(&self, t: f64) -> Result<NoiseParams, String> {
        self.check(t)?;
        let m = [0, 1, 2].map(|k| self.multipliers[k].eval(t));
        Ok(apply_multipliers(&self.base, &MultiplierSet::from_array(t, m)))
    }
}

#[derive(Debug, Serialize)]
pub struct CalibratedParams {
    pub t_k: f64,
    pub s_ghz: f64,
    pub lambda_j_hz: f64,
    pub sigma_j_ghz: f64,
    pub tau_sd_ns: f64,
    pub target_fwhm_ghz: f64,
}

/// Noise parameters of the default calibration at `t_k`, interpolated
/// between nodes.
pub fn calibrated_params(t_k: f64) -> Result<CalibratedParams, String> {
    let curve = Curve::load()?;
    let p = curve.params_at(t_k)?;
    Ok(CalibratedParams {
        t_k,
        s_ghz: p.diffusion,
        lambda_j_hz: p.jump_rate_hz(),
        sigma_j_ghz: p.jump_sigma,
        tau_sd_ns: p.tau_sd,
        target_fwhm_ghz: BroadeningLaw::default().fwhm(t_k),
    })
}

#[derive(Debug, Serialize)]
pub struct LineshapeOut {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub gaussian: Vec<f64>,
    pub fwhm_ghz: f64,
    pub fwhm_stderr_ghz: f64,
    pub analytic_fwhm_ghz: f64,
    pub excess_kurtosis: f64,
    pub mean_jumps: f64,
}

/// Simulate a small ensemble and fit its spectral histogram.
pub fn lineshape(
    s_ghz: f64,
    lambda_j_hz: f64,
    sigma_j_ghz: f64,
    tau_sd_ns: f64,
    n_traj: usize,
    seed: u64,
) -> Result<LineshapeOut, String> {
    if !(1..=MAX_TRAJ).contains(&n_traj) {
        return Err(format!("trajectories must be in 1..={MAX_TRAJ}"));
    }
    let params = NoiseParams::new(0.0, tau_sd_ns, s_ghz, lambda_j_hz, sigma_j_ghz);
    params.validate(false).map_err(|e| e.to_string())?;
    let dt = 1e-3f64.min(tau_sd_ns / 20.0);
    let grid = SimGrid {
        dt,
        window: 5.0 * tau_sd_ns + 2.0,
        n_traj,
        seed,
        burn_in: 5.0 * tau_sd_ns,
    };
    let ls = measure(&params, &grid, JumpScheme::Hazard, BinRule::Auto).map_err(|e| e.to_string())?;
    let centers = ls.histogram.centers();
    let f = ls.fit;
    let gaussian = centers
        .iter()
        .map(|x| f.amplitude * (-0.5 * ((x - f.mu) / f.sigma_fit).powi(2)).exp())
        .collect();
    Ok(LineshapeOut {
        density: ls.histogram.densities(),
        centers,
        gaussian,
        fwhm_ghz: f.fwhm,
        fwhm_stderr_ghz: f.fwhm_stderr,
        analytic_fwhm_ghz: analytic_fwhm(&params),
        excess_kurtosis: f.excess_kurtosis,
        mean_jumps: ls.mean_jumps,
    })
}

#[derive(Debug, Serialize)]
pub struct G2Out {
    pub tau_ns: Vec<f64>,
    pub g2: Vec<f64>,
    pub regime: String,
    pub variance_ghz2: f64,
    pub gamma_sdj_perns: f64,
    pub envelope_rate_perns: f64,
    pub omega_eff_radns: f64,
}

/// g²(τ) at temperature `t_k` for a drive of `omega_r_ghz`.
pub fn g2_at(t_k: f64, omega_r_ghz: f64, t1: f64, t2: f64) -> Result<G2Out, String> {
    let curve = Curve::load()?;
    curve.check(t_k)?;
    let emitter = EmitterParams::with_rabi_ghz(t1, t2, omega_r_ghz);
    emitter.validate().map_err(|e| e.to_string())?;
    let variance = curve.model.variance(t_k).ok_or("calibration has no variance")?;
    let gamma = curve.model.gamma_coeff(t_k) * emitter.omega_r;
    let full = trace_for(&emitter, variance, gamma, None).map_err(|e| e.to_string())?;
    let stride = full.tau.len().div_ceil(MAX_PLOT_POINTS).max(1);
    let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
    Ok(G2Out {
        tau_ns: pick(&full.tau),
        g2: pick(&full.g2),
        regime: full.regime.as_str().to_string(),
        variance_ghz2: variance,
        gamma_sdj_perns: gamma,
        envelope_rate_perns: full.envelope_rate,
        omega_eff_radns: full.omega_eff.magnitude,
    })
}

#[derive(Debug, Serialize)]
pub struct DecayOut {
    pub omega_r_radns: Vec<f64>,
    /// `None` where no decay rate could be fitted.
    pub decay_rate_perns: Vec<Option<f64>>,
    pub slope: f64,
    pub t_crit_k: f64,
}

/// Decay rate against drive strength (1 to 10 GHz) at `t_k`, with the
/// slope and the crossover temperature of the default curve.
pub fn decay_at(t_k: f64, t1: f64, t2: f64) -> Result<DecayOut, String> {
    let curve = Curve::load()?;
    curve.check(t_k)?;
    let variance = curve.model.variance(t_k).ok_or("calibration has no variance")?;
    let coeff = curve.model.gamma_coeff(t_k);
    let omega_r: Vec<f64> = (1..=10).map(|g| ghz_to_rad_per_ns(g as f64)).collect();
    let mut rates = Vec::with_capacity(omega_r.len());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &w in &omega_r {
        let emitter = EmitterParams { t1, t2, omega_r: w };
        emitter.validate().map_err(|e| e.to_string())?;
        let rate = trace_for(&emitter, variance, coeff * w, None)
            .and_then(|tr| extract_decay_rate(&tr))
            .ok()
            .map(|f| f.decay_rate);
        if let Some(r) = rate {
            xs.push(w);
            ys.push(r);
        }
        rates.push(rate);
    }
    let slope = if xs.len() >= 2 {
        specdiff::coherence::linear_fit(&xs, &ys).1
    } else {
        f64::NAN
    };
    let cross = crossover_temperature(
        &curve.model,
        &curve.rows,
        &BroadeningLaw::default(),
        &CrossoverCriterion::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(DecayOut {
        omega_r_radns: omega_r,
        decay_rate_perns: rates,
        slope,
        t_crit_k: cross.t_crit,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = calibratedParams)]
pub fn calibrated_params_js(t_k: f64) -> Result<String, JsValue> {
    to_js(calibrated_params(t_k))
}

#[wasm_bindgen(js_name = simulateLineshape)]
pub fn lineshape_js(
    s_ghz: f64,
    lambda_j_hz: f64,
    sigma_j_ghz: f64,
    tau_sd_ns: f64,
    n_traj: u32,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(lineshape(
        s_ghz,
        lambda_j_hz,
        sigma_j_ghz,
        tau_sd_ns,
        n_traj as usize,
        seed as u64,
    ))
}

#[wasm_bindgen(js_name = g2Trace)]
pub fn g2_js(t_k: f64, omega_r_ghz: f64, t1: f64, t2: f64) -> Result<String, JsValue> {
    to_js(g2_at(t_k, omega_r_ghz, t1, t2))
}

#[wasm_bindgen(js_name = decaySweep)]
pub fn decay_js(t_k: f64, t1: f64, t2: f64) -> Result<String, JsValue> {
    to_js(decay_at(t_k, t1, t2))
}
