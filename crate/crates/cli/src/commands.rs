//! Subcommand implementations. Each one validates everything it needs before
//! simulating, then writes its files under the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use specdiff::calibration::{self, Baseline, CalibrationResult};
use specdiff::coherence::{
    self, decay_slope, decay_sweep, extract_decay_rate, ghz_to_rad_per_ns, trace_for, CrossoverCriterion,
    DephasingModel, EmitterParams, G2Trace, Regime,
};
use specdiff::interp::Pchip;
use specdiff::io::{csv_line, fmt_sig};
use specdiff::lineshape::{
    analytic_fwhm, analytic_variance, discrete_variance, measure, BinRule, FitSummary, Histogram, LineShape,
};
use specdiff::params::{NoiseParams, SimGrid};
use specdiff::sde::{simulate_ensemble_with, JumpScheme, SimLimits};
use specdiff::svg::{Plot, Series, Style};
use specdiff::Error;

use crate::config::RunConfig;
use crate::{CalibArgs, CliError, EmitterArgs, GridArgs, ParamArgs};

type Res<T> = Result<T, CliError>;

pub struct Ctx {
    pub cfg: RunConfig,
    pub strict: bool,
    pub base: Baseline,
}

impl Ctx {
    pub fn new(cfg: RunConfig, strict: bool) -> Res<Self> {
        let base = cfg.baseline.baseline(&cfg.law)?;
        Ok(Self { cfg, strict, base })
    }

    fn out(&self) -> &Path {
        &self.cfg.output.dir
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Res<PathBuf> {
        fs::create_dir_all(self.out()).map_err(Error::from)?;
        let path = self.out().join(name);
        fs::write(&path, bytes).map_err(Error::from)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json(&self, name: &str, v: &Value) -> Res<PathBuf> {
        let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn write_svg(&self, name: &str, plot: &Plot) -> Res<()> {
        if self.cfg.output.svg {
            self.write(name, plot.render().as_bytes())?;
        }
        Ok(())
    }

    fn remove(&self, name: &str) {
        let _ = fs::remove_file(self.out().join(name));
    }
}

fn parse_list(text: &str, what: &str) -> Res<Vec<f64>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{what}: `{s}` is not a number")))
        })
        .collect()
}

fn list_or(text: Option<&str>, fallback: &[f64], what: &str) -> Res<Vec<f64>> {
    match text {
        Some(t) => parse_list(t, what),
        None if fallback.is_empty() => Err(CliError::Usage(format!("{what} list is empty"))),
        None => Ok(fallback.to_vec()),
    }
}

/// Number formatted for file names: `5`, `22.5`.
fn tag(x: f64) -> String {
    format!("{x}")
}

fn to_json_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn params_json(p: &NoiseParams) -> Value {
    json!({
        "S_GHz": p.diffusion,
        "lambdaJ_Hz": p.jump_rate_hz(),
        "sigmaJ_GHz": p.jump_sigma,
        "tau_sd_ns": p.tau_sd,
        "omega0_GHz": p.omega0,
    })
}

fn grid_json(g: &SimGrid, scheme: JumpScheme) -> Value {
    json!({
        "dt_ns": g.dt,
        "window_ns": g.window,
        "burn_in_ns": g.burn_in,
        "n_traj": g.n_traj,
        "seed": g.seed,
        "scheme": to_json_value(&scheme),
    })
}

fn grid_for(ctx: &Ctx, a: &GridArgs) -> Res<(SimGrid, JumpScheme, BinRule)> {
    let g = &ctx.cfg.grid;
    let mut grid = g.sim_grid(ctx.cfg.seed);
    if let Some(n) = a.n_traj {
        grid.n_traj = n;
    }
    if let Some(dt) = a.dt {
        grid.dt = dt;
    }
    if let Some(w) = a.window {
        grid.window = w;
    }
    if let Some(b) = a.burn_in {
        grid.burn_in = b;
    }
    grid.validate()?;
    let scheme = a.scheme.map(JumpScheme::from).unwrap_or(g.scheme);
    let bins = match a.bins.unwrap_or(g.bins) {
        0 => BinRule::Auto,
        k => BinRule::Fixed(k),
    };
    Ok((grid, scheme, bins))
}

fn calibrate_inline(ctx: &Ctx, temps: &[f64]) -> Res<Vec<CalibrationResult>> {
    log::info!("calibrating {temps:?} K in-process");
    let cfg = ctx.cfg.calib_config(ctx.strict);
    cfg.validate()?;
    Ok(calibration::calibrate_curve(temps, &ctx.base, &ctx.cfg.law, &cfg)?)
}

/// Calibrated curve from `--calibration`, `<out>/calibration.csv` or an
/// in-process run over `inline_temps`.
fn load_curve(ctx: &Ctx, c: &CalibArgs, inline_temps: &[f64]) -> Res<Vec<CalibrationResult>> {
    if c.inline {
        return calibrate_inline(ctx, inline_temps);
    }
    let path = c
        .calibration
        .clone()
        .unwrap_or_else(|| ctx.out().join("calibration.csv"));
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::MissingCalibration(format!(
            "cannot read {} ({e}); run `specdiff calibrate` first or pass --inline",
            path.display()
        ))
    })?;
    let curve = calibration::read_csv(&text, &ctx.base)?;
    if curve.is_empty() {
        return Err(CliError::MissingCalibration(format!("{} has no rows", path.display())));
    }
    Ok(curve)
}

fn check_in_curve(curve: &[CalibrationResult], t: f64) -> Res<()> {
    let lo = curve.first().map(|r| r.multipliers.t).unwrap_or(f64::NAN);
    let hi = curve.last().map(|r| r.multipliers.t).unwrap_or(f64::NAN);
    if !(t >= lo && t <= hi) {
        return Err(Error::InvalidInput(format!("T = {t} K is outside the calibrated range [{lo}, {hi}] K")).into());
    }
    Ok(())
}

/// Noise parameters at `t`: the calibrated row itself at a node, otherwise
/// monotone interpolation of each multiplier between nodes.
fn params_at(ctx: &Ctx, curve: &[CalibrationResult], t: f64) -> Res<NoiseParams> {
    check_in_curve(curve, t)?;
    if let Some(r) = curve.iter().find(|r| r.multipliers.t == t) {
        return Ok(r.params);
    }
    let ts: Vec<f64> = curve.iter().map(|r| r.multipliers.t).collect();
    let mut m = [0.0; 3];
    for (k, slot) in m.iter_mut().enumerate() {
        let ys: Vec<f64> = curve.iter().map(|r| r.multipliers.as_array()[k]).collect();
        *slot = Pchip::new(&ts, &ys)?.eval(t);
    }
    Ok(calibration::apply_multipliers(
        &ctx.base,
        &calibration::MultiplierSet::from_array(t, m),
    ))
}

/// Stationary variance at `t` interpolated over the calibrated curve (GHz²).
fn variance_at(curve: &[CalibrationResult], t: f64) -> Res<f64> {
    check_in_curve(curve, t)?;
    if let Some(r) = curve.iter().find(|r| r.multipliers.t == t) {
        return Ok(analytic_variance(&r.params));
    }
    let ts: Vec<f64> = curve.iter().map(|r| r.multipliers.t).collect();
    let vs: Vec<f64> = curve.iter().map(|r| analytic_variance(&r.params)).collect();
    Ok(Pchip::new(&ts, &vs)?.eval(t))
}

fn params_for(ctx: &Ctx, a: &ParamArgs, c: &CalibArgs) -> Res<NoiseParams> {
    let mut p = match a.t {
        Some(t) => {
            let curve = load_curve(ctx, c, &[t])?;
            params_at(ctx, &curve, t)?
        }
        None => ctx.base.params(),
    };
    if let Some(s) = a.s {
        p.diffusion = s;
    }
    if let Some(l) = a.lambda_j {
        p = NoiseParams::new(p.omega0, p.tau_sd, p.diffusion, l, p.jump_sigma);
    }
    if let Some(s) = a.sigma_j {
        p.jump_sigma = s;
    }
    if let Some(t) = a.tau_sd {
        p.tau_sd = t;
    }
    if let Some(w) = a.omega0 {
        p.omega0 = w;
    }
    p.validate(false)?;
    Ok(p)
}

fn emitter_times(ctx: &Ctx, a: &EmitterArgs) -> Option<(f64, f64)> {
    let t1 = a.t1.or(ctx.cfg.emitter.t1)?;
    let t2 = a.t2.or(ctx.cfg.emitter.t2)?;
    Some((t1, t2))
}

fn require_emitter(ctx: &Ctx, a: &EmitterArgs) -> Res<(f64, f64)> {
    let (t1, t2) = emitter_times(ctx, a).ok_or_else(|| {
        CliError::Usage("emitter lifetimes are required: set [emitter] t1/t2 or pass --t1/--t2".into())
    })?;
    EmitterParams { t1, t2, omega_r: 0.0 }.validate()?;
    Ok((t1, t2))
}

fn dephasing_model(ctx: &Ctx, curve: &[CalibrationResult]) -> Res<DephasingModel> {
    let d = &ctx.cfg.dephasing;
    Ok(match &d.table {
        Some(rows) => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            DephasingModel::from_table(&pts)?
        }
        None => DephasingModel::from_calibration(curve, d.kappa)?,
    })
}

fn gaussian_points(hist: &Histogram, mu: f64, sigma: f64, amplitude: f64) -> Vec<(f64, f64)> {
    let lo = hist.edges[0];
    let hi = hist.edges[hist.edges.len() - 1];
    let n = 400;
    (0..=n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let z = (x - mu) / sigma;
            (x, amplitude * (-0.5 * z * z).exp())
        })
        .collect()
}

fn density_points(ls: &LineShape) -> Vec<(f64, f64)> {
    ls.histogram
        .centers()
        .into_iter()
        .zip(ls.histogram.densities())
        .collect()
}

fn lineshape_json(ls: &LineShape) -> Value {
    let m = ls.moments();
    json!({
        "params": params_json(&ls.params),
        "fit": to_json_value(&FitSummary::from(&ls.fit)),
        "fwhm_stderr_GHz": ls.fit.fwhm_stderr,
        "fwhm_analytic_GHz": analytic_fwhm(&ls.params),
        "variance_sample_GHz2": m.variance,
        "variance_analytic_GHz2": ls.analytic_variance,
        "mean_jumps_per_traj": ls.mean_jumps,
    })
}

pub fn simulate(ctx: &Ctx, a: &ParamArgs, g: &GridArgs, c: &CalibArgs, dump: Option<usize>) -> Res<()> {
    let params = params_for(ctx, a, c)?;
    let (grid, scheme, bins) = grid_for(ctx, g)?;
    let dump = dump.unwrap_or(ctx.cfg.output.trajectories);
    if dump > 0 {
        let limits = SimLimits {
            max_samples: ctx.cfg.grid.max_samples,
        };
        let ens = simulate_ensemble_with(&params, &grid.with_trajectories(dump), scheme, limits)?;
        let mut buf = Vec::new();
        ens.write_csv(&mut buf, &(0..dump).collect::<Vec<_>>())?;
        ctx.write("trajectories.csv", &buf)?;
    }

    let ls = measure(&params, &grid, scheme, bins)?;
    let mut buf = Vec::new();
    ls.histogram.write_csv(&mut buf)?;
    ctx.write("histogram.csv", &buf)?;
    ctx.write_json("fit.json", &to_json_value(&FitSummary::from(&ls.fit)))?;

    let m = ls.moments();
    let v_dis = discrete_variance(&params, grid.dt);
    let stats = json!({
        "params": params_json(&params),
        "grid": grid_json(&grid, scheme),
        "samples": m.count,
        "bins": ls.histogram.n_bins(),
        "mean_GHz": m.mean,
        "variance_GHz2": m.variance,
        "skewness_dimless": m.skewness,
        "excess_kurtosis_dimless": m.excess_kurtosis,
        "mean_jumps_per_traj": ls.mean_jumps,
        "fwhm_fit_GHz": ls.fit.fwhm,
        "fwhm_fit_stderr_GHz": ls.fit.fwhm_stderr,
        "variance_analytic_GHz2": ls.analytic_variance,
        "variance_discrete_GHz2": v_dis,
        "fwhm_analytic_GHz": analytic_fwhm(&params),
    });
    ctx.write_json("stats.json", &stats)?;

    let mut plot = Plot::new("Detuning distribution", "detuning (GHz)", "density (1/GHz)");
    plot.push(Series::new("simulated", density_points(&ls), Style::Line));
    plot.push(Series::new(
        "Gaussian fit",
        gaussian_points(&ls.histogram, ls.fit.mu, ls.fit.sigma_fit, ls.fit.amplitude),
        Style::Dashed,
    ));
    let sd = ls.analytic_variance.sqrt();
    plot.push(Series::new(
        "closed form",
        gaussian_points(
            &ls.histogram,
            params.omega0,
            sd,
            1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt()),
        ),
        Style::Dashed,
    ));
    ctx.write_svg("lineshape.svg", &plot)?;

    let fa = analytic_fwhm(&params);
    println!(
        "FWHM (Gaussian fit): {:.4} ± {:.4} GHz",
        ls.fit.fwhm, ls.fit.fwhm_stderr
    );
    println!(
        "FWHM (closed form):  {:.4} GHz ({:+.2}%)",
        fa,
        100.0 * (ls.fit.fwhm - fa) / fa
    );
    println!(
        "variance: sample {:.5}, closed form {:.5}, discrete {:.5} GHz^2",
        m.variance, ls.analytic_variance, v_dis
    );
    println!("excess kurtosis: {:.4}", m.excess_kurtosis);
    println!("mean jumps per trajectory: {:.3}", ls.mean_jumps);
    Ok(())
}

fn calibration_plots(ctx: &Ctx, rows: &[CalibrationResult]) -> Res<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let pts = |k: usize| -> Vec<(f64, f64)> {
        rows.iter()
            .map(|r| (r.multipliers.t, r.multipliers.as_array()[k]))
            .collect()
    };
    let mut p = Plot::new("Calibrated multipliers", "T (K)", "multiplier");
    p.push(Series::new("m_sigma", pts(0), Style::Line));
    p.push(Series::new("m_lambda", pts(1), Style::Line));
    p.push(Series::new("m_sigmaJ", pts(2), Style::Line));
    ctx.write_svg("calibration_multipliers.svg", &p)?;

    let lo = rows[0].multipliers.t.min(ctx.base.t0);
    let hi = rows[rows.len() - 1].multipliers.t;
    let law: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / 200.0;
            (t, ctx.cfg.law.fwhm(t))
        })
        .collect();
    let mut p = Plot::new("Linewidth against temperature", "T (K)", "FWHM (GHz)");
    p.push(Series::new("A + B T^3", law, Style::Dashed));
    p.push(Series::new(
        "Monte Carlo",
        rows.iter().map(|r| (r.multipliers.t, r.achieved_fwhm)).collect(),
        Style::Markers,
    ));
    ctx.write_svg("calibration_fwhm.svg", &p)
}

fn print_calibration(rows: &[CalibrationResult]) {
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "T_K", "m_sigma", "m_lambda", "m_sigmaJ", "target", "achieved", "residual"
    );
    for r in rows {
        let m = &r.multipliers;
        println!(
            "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>+9.4}",
            m.t, m.m_sigma, m.m_lambda, m.m_sigma_j, r.target_fwhm, r.achieved_fwhm, r.residual
        );
    }
}

fn calibration_csv(rows: &[CalibrationResult]) -> Res<Vec<u8>> {
    let mut buf = Vec::new();
    calibration::write_csv(&mut buf, rows)?;
    Ok(buf)
}

pub fn calibrate(ctx: &Ctx, temps: Option<&str>, n_traj: Option<usize>, max_evals: Option<usize>) -> Res<()> {
    let temps = list_or(temps, &ctx.cfg.simplex.temps, "temperature")?;
    let mut cfg = ctx.cfg.calib_config(ctx.strict);
    if let Some(n) = n_traj {
        cfg.sim.n_traj = n;
    }
    if let Some(m) = max_evals {
        cfg.max_evals = m;
    }
    cfg.validate()?;
    println!("tolerance {} GHz", cfg.tolerance);
    match calibration::calibrate_curve(&temps, &ctx.base, &ctx.cfg.law, &cfg) {
        Ok(rows) => {
            ctx.write("calibration.csv", &calibration_csv(&rows)?)?;
            ctx.remove("calibration_failed.csv");
            calibration_plots(ctx, &rows)?;
            print_calibration(&rows);
            Ok(())
        }
        Err(Error::CalibrationFailure {
            best,
            tolerance,
            completed,
        }) => {
            ctx.write("calibration.csv", &calibration_csv(&completed)?)?;
            ctx.write(
                "calibration_failed.csv",
                &calibration_csv(std::slice::from_ref(&*best))?,
            )?;
            calibration_plots(ctx, &completed)?;
            print_calibration(&completed);
            println!("failed:");
            print_calibration(std::slice::from_ref(&*best));
            Err(Error::CalibrationFailure {
                best,
                tolerance,
                completed,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

/// ζ of the equivalent damped oscillator: below 1 oscillatory, 1 critical,
/// above 1 overdamped.
fn damping_ratio(trace: &G2Trace) -> f64 {
    let g = trace.envelope_rate;
    let w = trace.omega_eff.magnitude;
    match trace.regime {
        Regime::Oscillatory => g / (g * g + w * w).sqrt(),
        Regime::Critical => 1.0,
        Regime::Overdamped if w < g => g / (g * g - w * w).sqrt(),
        Regime::Overdamped => f64::INFINITY,
    }
}

pub fn g2(ctx: &Ctx, temps: Option<&str>, omegas: Option<&str>, e: &EmitterArgs, c: &CalibArgs) -> Res<()> {
    let temps = list_or(temps, &ctx.cfg.emitter.sweep_temps, "temperature")?;
    let omegas = list_or(omegas, &ctx.cfg.emitter.omega_r_ghz, "Rabi frequency")?;
    if let Some(w) = omegas.iter().find(|w| **w < 0.0) {
        return Err(Error::InvalidInput(format!("Rabi frequency must be >= 0 GHz, got {w}")).into());
    }
    let (t1, t2) = require_emitter(ctx, e)?;
    let curve = load_curve(ctx, c, &ctx.cfg.simplex.temps)?;
    for &t in &temps {
        check_in_curve(&curve, t)?;
    }
    let model = dephasing_model(ctx, &curve)?;

    let mut summary = String::from(
        "T_K,omegaR_GHz,omegaR_radns,gamma_sdj_perns,envelope_rate_perns,omega_eff_radns,variance_GHz2,damping_ratio_dimless,regime\n",
    );
    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>10}  regime",
        "T_K", "OmR_GHz", "gamma/ns", "Gamma/ns", "|Om_eff|"
    );
    for &t in &temps {
        let variance = variance_at(&curve, t)?;
        let coeff = model.gamma_coeff(t);
        let mut plot = Plot::new(format!("g2 at {} K", tag(t)), "tau (ns)", "g2");
        for &w in &omegas {
            let em = EmitterParams::with_rabi_ghz(t1, t2, w);
            let trace: G2Trace = trace_for(&em, variance, coeff * em.omega_r, None)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            ctx.write(&format!("g2_T{}K_omegaR{}GHz.csv", tag(t), tag(w)), &buf)?;
            summary.push_str(&csv_line([
                fmt_sig(t),
                fmt_sig(w),
                fmt_sig(em.omega_r),
                fmt_sig(trace.gamma_sdj),
                fmt_sig(trace.envelope_rate),
                fmt_sig(trace.omega_eff.magnitude),
                fmt_sig(variance),
                fmt_sig(damping_ratio(&trace)),
                trace.regime.as_str().to_string(),
            ]));
            println!(
                "{:>6} {:>8} {:>10.4} {:>10.4} {:>10.4}  {}",
                t,
                w,
                trace.gamma_sdj,
                trace.envelope_rate,
                trace.omega_eff.magnitude,
                trace.regime.as_str()
            );
            plot.push(Series::new(
                format!("{} GHz", tag(w)),
                trace.tau.iter().copied().zip(trace.g2.iter().copied()).collect(),
                Style::Line,
            ));
        }
        ctx.write_svg(&format!("g2_T{}K.svg", tag(t)), &plot)?;
    }
    ctx.write("g2_summary.csv", summary.as_bytes())?;
    Ok(())
}

pub fn crossover(ctx: &Ctx, e: &EmitterArgs, c: &CalibArgs) -> Res<()> {
    let (t1, t2) = require_emitter(ctx, e)?;
    let sweep_temps = &ctx.cfg.emitter.sweep_temps;
    let omegas: Vec<f64> = ctx
        .cfg
        .emitter
        .sweep_omega_r_ghz
        .iter()
        .map(|w| ghz_to_rad_per_ns(*w))
        .collect();
    let curve = load_curve(ctx, c, &ctx.cfg.simplex.temps)?;
    for &t in sweep_temps {
        check_in_curve(&curve, t)?;
    }
    let model = dephasing_model(ctx, &curve)?;
    let criterion = CrossoverCriterion {
        target_slope: ctx.cfg.dephasing.target_slope,
        ..Default::default()
    };
    let result = coherence::crossover_temperature(&model, &curve, &ctx.cfg.law, &criterion);

    let mut plot = Plot::new("Decay rate against drive", "Omega_R (rad/ns)", "decay rate (1/ns)");
    let mut slopes = Vec::new();
    let mut top: f64 = 0.0;
    for &t in sweep_temps {
        let variance = variance_at(&curve, t)?;
        let fits = decay_sweep(t1, t2, &omegas, variance, model.gamma_coeff(t))?;
        let mut buf = Vec::new();
        coherence::write_decay_csv(&mut buf, &fits)?;
        ctx.write(&format!("decay_T{}K.csv", tag(t)), &buf)?;
        let (slope, intercept, r2) = decay_slope(&fits)?;
        println!(
            "T = {} K: slope {:.4}, intercept {:.4} 1/ns, R^2 {:.4}",
            t, slope, intercept, r2
        );
        slopes.push(json!({
            "T_K": t,
            "slope_dimless": slope,
            "intercept_perns": intercept,
            "r2": r2,
        }));
        top = fits.iter().fold(top, |m, f| m.max(f.decay_rate).max(f.omega_r));
        plot.push(Series::new(
            format!("{} K", tag(t)),
            fits.iter().map(|f| (f.omega_r, f.decay_rate)).collect(),
            Style::Markers,
        ));
    }
    plot.push(Series::new(
        "Gamma = Omega_R",
        vec![(0.0, 0.0), (top, top)],
        Style::Dashed,
    ));
    plot.x_range = Some((0.0, omegas.iter().cloned().fold(0.0, f64::max) * 1.05));
    ctx.write_svg("crossover.svg", &plot)?;

    match result {
        Ok(x) => {
            println!(
                "T_crit = {:.3} K (dephasing root {:.3} K, FWHM {:.4} GHz)",
                x.t_crit, x.t_root, x.fwhm
            );
            let report = json!({
                "T_crit_K": x.t_crit,
                "T_root_K": x.t_root,
                "fwhm_GHz": x.fwhm,
                "degenerate": x.degenerate,
                "kappa_dimless": model.kappa(),
                "target_slope_dimless": criterion.target_slope,
                "sweeps": slopes,
            });
            ctx.write_json("crossover.json", &report)?;
            Ok(())
        }
        Err(e) => {
            ctx.remove("crossover.json");
            Err(e.into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Sigma,
    TauSd,
    LambdaJ,
    SigmaJ,
}

impl Axis {
    fn parse(s: &str) -> Res<Self> {
        Ok(match s.trim() {
            "sigma" => Axis::Sigma,
            "tau-sd" => Axis::TauSd,
            "lambda-j" => Axis::LambdaJ,
            "sigma-j" => Axis::SigmaJ,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown scan axis `{other}` (sigma, tau-sd, lambda-j, sigma-j)"
                )))
            }
        })
    }

    fn name(self) -> &'static str {
        match self {
            Axis::Sigma => "sigma",
            Axis::TauSd => "tau-sd",
            Axis::LambdaJ => "lambda-j",
            Axis::SigmaJ => "sigma-j",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Axis::Sigma => "S_GHz",
            Axis::TauSd => "tau_sd_ns",
            Axis::LambdaJ => "lambdaJ_Hz",
            Axis::SigmaJ => "sigmaJ_GHz",
        }
    }

    fn apply(self, p: &NoiseParams, v: f64) -> NoiseParams {
        match self {
            Axis::Sigma => NoiseParams { diffusion: v, ..*p },
            Axis::TauSd => NoiseParams { tau_sd: v, ..*p },
            Axis::LambdaJ => NoiseParams::new(p.omega0, p.tau_sd, p.diffusion, v, p.jump_sigma),
            Axis::SigmaJ => NoiseParams { jump_sigma: v, ..*p },
        }
    }
}

/// Grid for one scan point. Along τ_sd the step is kept at or below τ/20
/// and the burn-in at or above 5τ, with the stationary span unchanged.
fn scan_grid(grid: &SimGrid, axis: Axis, v: f64) -> SimGrid {
    if axis != Axis::TauSd {
        return *grid;
    }
    let span = grid.window - grid.burn_in;
    let burn_in = grid.burn_in.max(5.0 * v);
    SimGrid {
        dt: grid.dt.min(v / 20.0),
        burn_in,
        window: burn_in + span,
        ..*grid
    }
}

#[allow(clippy::too_many_arguments)]
pub fn scan(
    ctx: &Ctx,
    vary: &[String],
    values: &str,
    a: &ParamArgs,
    g: &GridArgs,
    c: &CalibArgs,
    e: &EmitterArgs,
) -> Res<()> {
    if vary.len() != 1 {
        return Err(CliError::Usage(format!(
            "scan varies exactly one axis per run, got {}",
            vary.join(",")
        )));
    }
    let axis = Axis::parse(&vary[0])?;
    let values = parse_list(values, "scan value")?;
    let base = params_for(ctx, a, c)?;
    let (grid, scheme, bins) = grid_for(ctx, g)?;
    let points: Vec<(NoiseParams, SimGrid)> = values
        .iter()
        .map(|&v| {
            let p = axis.apply(&base, v);
            let gr = scan_grid(&grid, axis, v);
            p.validate(false)?;
            gr.validate()?;
            Ok((p, gr))
        })
        .collect::<Result<_, Error>>()?;
    let emitter = match emitter_times(ctx, e) {
        Some((t1, t2)) => {
            let em = EmitterParams::with_rabi_ghz(t1, t2, ctx.cfg.emitter.scan_omega_r_ghz);
            em.validate()?;
            Some(em)
        }
        None => {
            log::warn!("no emitter lifetimes configured; g2 columns are NaN");
            None
        }
    };
    let d = &ctx.cfg.dephasing;

    let mut csv = format!(
        "{},fwhm_GHz,fwhm_analytic_GHz,excess_kurtosis_dimless,decay_rate_perns,envelope_rate_perns,regime\n",
        axis.column()
    );
    let mut fw_sim = Vec::new();
    let mut fw_ana = Vec::new();
    let mut g2_plot = Plot::new(format!("g2 against {}", axis.name()), "tau (ns)", "g2");
    let mut ls_plot = Plot::new(
        format!("Line shape against {}", axis.name()),
        "detuning (GHz)",
        "density (1/GHz)",
    );
    println!(
        "{:>12} {:>10} {:>10} {:>10} {:>10}  regime",
        axis.column(),
        "FWHM",
        "closed",
        "kurtosis",
        "decay/ns"
    );
    for (&v, (p, gr)) in values.iter().zip(&points) {
        let ls = measure(p, gr, scheme, bins)?;
        let fa = analytic_fwhm(p);
        let (decay, envelope, regime) = match &emitter {
            Some(em) => {
                let gamma = coherence::gamma_coeff_scaled(p, d.kappa, d.reference_jump_variance) * em.omega_r;
                let trace = trace_for(em, analytic_variance(p), gamma, None)?;
                let decay = match extract_decay_rate(&trace) {
                    Ok(f) => f.decay_rate,
                    Err(Error::PoorFit { fit }) => {
                        log::warn!("{} = {v}: decay fit R^2 {:.3}", axis.name(), fit.fit_r2);
                        fit.decay_rate
                    }
                    Err(err) => {
                        log::warn!("{} = {v}: {err}", axis.name());
                        f64::NAN
                    }
                };
                g2_plot.push(Series::new(
                    fmt_sig(v).trim_end().to_string(),
                    trace.tau.iter().copied().zip(trace.g2.iter().copied()).collect(),
                    Style::Line,
                ));
                (decay, trace.envelope_rate, trace.regime.as_str().to_string())
            }
            None => (f64::NAN, f64::NAN, "none".to_string()),
        };
        csv.push_str(&csv_line([
            fmt_sig(v),
            fmt_sig(ls.fit.fwhm),
            fmt_sig(fa),
            fmt_sig(ls.fit.excess_kurtosis),
            fmt_sig(decay),
            fmt_sig(envelope),
            regime.clone(),
        ]));
        println!(
            "{:>12} {:>10.4} {:>10.4} {:>10.4} {:>10.4}  {}",
            fmt_sig(v),
            ls.fit.fwhm,
            fa,
            ls.fit.excess_kurtosis,
            decay,
            regime
        );
        fw_sim.push((v, ls.fit.fwhm));
        fw_ana.push((v, fa));
        ls_plot.push(Series::new(fmt_sig(v), density_points(&ls), Style::Line));
    }
    let stem = format!("scan_{}", axis.name());
    ctx.write(&format!("{stem}.csv"), csv.as_bytes())?;

    let mut p = Plot::new(format!("FWHM against {}", axis.name()), axis.column(), "FWHM (GHz)");
    p.push(Series::new("Monte Carlo", fw_sim, Style::Markers));
    p.push(Series::new("closed form", fw_ana, Style::Dashed));
    ctx.write_svg(&format!("{stem}_fwhm.svg"), &p)?;
    ctx.write_svg(&format!("{stem}_lineshape.svg"), &ls_plot)?;
    if emitter.is_some() {
        ctx.write_svg(&format!("{stem}_g2.svg"), &g2_plot)?;
    }
    Ok(())
}

pub fn compare_ou(ctx: &Ctx, a: &ParamArgs, g: &GridArgs, c: &CalibArgs, target: Option<f64>) -> Res<()> {
    let mut params = params_for(ctx, a, c)?;
    if let Some(fw) = target {
        if !(fw.is_finite() && fw > 0.0) {
            return Err(Error::InvalidInput(format!("target FWHM must be > 0, got {fw}")).into());
        }
        let scale = fw / analytic_fwhm(&params);
        params.diffusion *= scale;
        params.jump_sigma *= scale;
    }
    let (grid, scheme, bins) = grid_for(ctx, g)?;
    let cmp = specdiff::lineshape::compare_ou_vs_hybrid(&params, &grid, scheme, bins)?;
    let mut buf = Vec::new();
    cmp.write_csv(&mut buf)?;
    ctx.write("compare_ou.csv", &buf)?;
    ctx.write_json(
        "compare_ou.json",
        &json!({
            "target_variance_GHz2": cmp.target_variance,
            "target_fwhm_GHz": analytic_fwhm(&params),
            "grid": grid_json(&grid, scheme),
            "hybrid": lineshape_json(&cmp.hybrid),
            "ou": lineshape_json(&cmp.ou),
        }),
    )?;
    let mut plot = Plot::new("Hybrid against pure OU", "detuning (GHz)", "density (1/GHz)");
    plot.push(Series::new("hybrid", density_points(&cmp.hybrid), Style::Line));
    plot.push(Series::new("pure OU", density_points(&cmp.ou), Style::Dashed));
    ctx.write_svg("compare_ou.svg", &plot)?;
    for (name, ls) in [("hybrid", &cmp.hybrid), ("pure OU", &cmp.ou)] {
        println!(
            "{name:>8}: FWHM {:.4} GHz, excess kurtosis {:.4}, sample variance {:.5} GHz^2",
            ls.fit.fwhm,
            ls.moments().excess_kurtosis,
            ls.moments().variance
        );
    }
    println!("closed-form variance {:.5} GHz^2", cmp.target_variance);
    Ok(())
}
