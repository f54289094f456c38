//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails when a criterion fails, except for criteria listed in
//! `KNOWN_FAILING`, which must keep failing (an unexpected pass also fails the
//! run so the list gets revisited).

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use specdiff::calibration::{calibrate_curve, Baseline, BroadeningLaw, CalibConfig, CalibrationResult};
use specdiff::coherence::{
    crossover_temperature, decay_slope, decay_sweep, envelope_rate, g2, g2_trace, gamma_coeff_scaled, linear_fit,
    slow_rate, CrossoverCriterion, DephasingModel, EffectiveRabi, EmitterParams, Regime, DEFAULT_CURVE_TEMPS,
    DEFAULT_KAPPA, DEFAULT_REFERENCE_JUMP_VARIANCE,
};
use specdiff::lineshape::{analytic_variance, discrete_variance, measure, stream_summary, BinRule};
use specdiff::params::{NoiseParams, SimGrid};
use specdiff::rng::splitmix64;
use specdiff::sde::{jump_counts, JumpScheme};

/// Criterion 1 compares against S²/2 + λσ_J²τ, twice the stationary variance
/// of the update rule as written; the ensemble lands on S²/4 + λσ_J²τ/2
/// (line 1b).
const KNOWN_FAILING: &[&str] = &["1"];

/// Emitter lifetimes shipped in configs/default.toml (ns).
const T1: f64 = 0.5;
const T2: f64 = 0.3;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn uniform(seed: u64, k: u64) -> f64 {
    (splitmix64(seed.wrapping_mul(0x100).wrapping_add(k)) >> 11) as f64 / (1u64 << 53) as f64
}

fn log_uniform(u: f64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b) / b
}

// ---------------------------------------------------------------- 1 and 1b

fn stationary_variance() -> (Outcome, Outcome) {
    let mut lines = Vec::new();
    let mut worst_stated: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for i in 0..6u64 {
        let s = log_uniform(uniform(i, 0), 0.1, 2.0);
        let tau = log_uniform(uniform(i, 1), 1e-2, 1.0);
        let lambda_hz = log_uniform(uniform(i, 2), 1e5, 1e7);
        let sigma_j = 2.0 * uniform(i, 3);
        let p = NoiseParams::new(0.0, tau, s, lambda_hz, sigma_j);
        // Step well below τ, burn-in of ten correlation times.
        let dt = (1e-3f64).min(tau / 100.0);
        let burn_in = 10.0 * tau;
        let grid = SimGrid {
            dt,
            window: burn_in + 4000.0 * dt,
            n_traj: 100_000,
            seed: 11 + i,
            burn_in,
        };
        let start = Instant::now();
        let mc = stream_summary(&p, &grid, JumpScheme::Bernoulli)
            .unwrap()
            .moments()
            .variance;
        let secs = start.elapsed().as_secs_f64();
        // Oracle: the closed form under test, typed in directly.
        let stated = s * s / 2.0 + p.jump_rate * sigma_j * sigma_j * tau;
        // Oracle: OU variance S²/(2τ)·τ/2 plus compound-Poisson λσ²τ/2.
        let exact = s * s / 4.0 + p.jump_rate * sigma_j * sigma_j * tau / 2.0;
        assert!((analytic_variance(&p) - exact).abs() < 1e-12 * exact);
        let e_stated = rel(mc, stated);
        let e_exact = rel(mc, exact);
        worst_stated = worst_stated.max(e_stated.abs());
        worst_exact = worst_exact.max(e_exact.abs());
        lines.push(format!(
            "    set {i}: S={s:.3} GHz tau={tau:.4} ns lambda={lambda_hz:.3e} Hz sigmaJ={sigma_j:.3} GHz | MC {mc:.5} | S^2/2+.. {stated:.5} ({:+.2}%) | S^2/4+.. {exact:.5} ({:+.2}%) | discrete {:.5} | {secs:.1} s",
            100.0 * e_stated,
            100.0 * e_exact,
            discrete_variance(&p, dt),
        ));
    }
    let detail = lines.join("\n");
    (
        Outcome {
            id: "1",
            title: "Monte-Carlo variance vs S^2/2 + lambda*sigmaJ^2*tau within 2%",
            pass: worst_stated < 0.02,
            detail: format!("worst deviation {:.2}%\n{detail}", 100.0 * worst_stated),
        },
        Outcome {
            id: "1b",
            title: "Monte-Carlo variance vs S^2/4 + lambda*sigmaJ^2*tau/2 within 2%",
            pass: worst_exact < 0.02,
            detail: format!("worst deviation {:.2}%", 100.0 * worst_exact),
        },
    )
}

// ---------------------------------------------------------------------- 2

fn linewidth_reproduction(curve: &[CalibrationResult]) -> Outcome {
    let law = BroadeningLaw::default();
    let mut ok = curve.len() == 3;
    let mut lines = Vec::new();
    // Hand-evaluated targets of 1.01 + 3.77e-5·T³.
    for (r, target) in curve.iter().zip([1.0147125, 1.3116, 2.02790]) {
        let t = r.multipliers.t;
        let err = r.achieved_fwhm - law.fwhm(t);
        ok &= err.abs() < 0.05 && (r.target_fwhm - target).abs() < 1e-6;
        let m = &r.multipliers;
        lines.push(format!(
            "    T={t} K target {:.4} achieved {:.4} residual {err:+.4} | m = ({:.4}, {:.4}, {:.4})",
            r.target_fwhm, r.achieved_fwhm, m.m_sigma, m.m_lambda, m.m_sigma_j
        ));
    }
    for k in 0..3 {
        ok &= curve
            .windows(2)
            .all(|w| w[1].multipliers.as_array()[k] >= w[0].multipliers.as_array()[k]);
    }
    let ratio = curve[1].multipliers.m_sigma_j / curve[0].multipliers.m_sigma_j;
    let lam: Vec<f64> = curve.iter().map(|r| r.multipliers.m_lambda).collect();
    let lam_spread = lam.iter().cloned().fold(0.0, f64::max) / lam.iter().cloned().fold(f64::MAX, f64::min);
    // "~5x" read as within 25%; "flat" as under 10% spread.
    ok &= (3.75..=6.25).contains(&ratio) && lam_spread < 1.1;
    Outcome {
        id: "2",
        title: "calibration at 5/20/30 K within 0.05 GHz, monotone, m_sigmaJ ~5x with flat m_lambda",
        pass: ok,
        detail: format!(
            "m_sigmaJ(20)/m_sigmaJ(5) = {ratio:.3}, m_lambda max/min = {lam_spread:.4}\n{}",
            lines.join("\n")
        ),
    }
}

// ---------------------------------------------------------------------- 3

fn limits(curve: &[CalibrationResult], model: &DephasingModel) -> Outcome {
    let base = Baseline::default();
    let ou = NoiseParams::ou(0.0, base.tau_sd, base.sigma0);
    let k_ou = stream_summary(&ou, &SimGrid::default(), JumpScheme::Bernoulli)
        .unwrap()
        .moments()
        .excess_kurtosis;

    let sparse = NoiseParams::new(0.0, 0.5, 0.0, 1e8, 1.0);
    let grid = SimGrid::default().with_trajectories(10_000).with_seed(5);
    let k_sparse = stream_summary(&sparse, &grid, JumpScheme::Bernoulli)
        .unwrap()
        .moments()
        .excess_kurtosis;

    let mut cold_ok = true;
    let mut cold = Vec::new();
    for r in curve.iter().filter(|r| r.multipliers.t <= 10.0) {
        for w in [1.0, 2.0, 4.0] {
            let em = EmitterParams::with_rabi_ghz(T1, T2, w);
            let tr = g2_trace(r.multipliers.t, &em, &r.params, model, Some(&[0.0, 1.0])).unwrap();
            cold_ok &= tr.regime == Regime::Oscillatory;
            cold.push(format!("{}K/{}GHz {}", r.multipliers.t, w, tr.regime.as_str()));
        }
    }

    let hot = curve.iter().find(|r| r.multipliers.t == 30.0).unwrap();
    let sd = analytic_variance(&hot.params).sqrt();
    let mut hot_ok = true;
    let mut hotl = Vec::new();
    for f in [0.25, 0.5, 0.9, 0.99] {
        let em = EmitterParams::with_rabi_ghz(T1, T2, f * sd);
        let tr = g2_trace(30.0, &em, &hot.params, model, Some(&[0.0, 1.0])).unwrap();
        hot_ok &= tr.regime == Regime::Overdamped;
        hotl.push(format!("{f}*sqrt(var) {}", tr.regime.as_str()));
    }

    Outcome {
        id: "3",
        title: "limits: OU Gaussian, sparse jumps heavy-tailed, cold oscillatory, hot weak drive overdamped",
        pass: k_ou.abs() < 0.05 && k_sparse > 1.0 && cold_ok && hot_ok,
        detail: format!(
            "excess kurtosis lambda=0: {k_ou:.4}; S=0 sparse jumps: {k_sparse:.2}\n    T<=10 K: {}\n    30 K (sqrt(var) = {sd:.4} GHz): {}",
            cold.join(", "),
            hotl.join(", ")
        ),
    }
}

// ---------------------------------------------------------------------- 4

fn g2_structure() -> Outcome {
    let em = EmitterParams {
        t1: 2.0,
        t2: 1.0,
        omega_r: PI,
    };
    let cases = [
        EffectiveRabi::real(PI),
        EffectiveRabi::real(0.3),
        EffectiveRabi::imaginary(0.0),
        EffectiveRabi::imaginary(0.4),
        EffectiveRabi::imaginary(40.0),
    ];
    let gamma = 0.7;
    let zero_ok = cases.iter().all(|w| g2(0.0, &em, gamma, *w) == 0.0);
    let mut tail_err: f64 = 0.0;
    for w in &cases {
        let t = 60.0 / slow_rate(&em, gamma, *w);
        tail_err = tail_err.max((g2(t, &em, gamma, *w) - 1.0).abs());
    }

    let eps = 1e-7;
    let mut cont: f64 = 0.0;
    for i in 0..=200 {
        let t = i as f64 * 0.05;
        let c = g2(t, &em, gamma, EffectiveRabi::imaginary(0.0));
        cont = cont
            .max((g2(t, &em, gamma, EffectiveRabi::real(eps)) - c).abs())
            .max((g2(t, &em, gamma, EffectiveRabi::imaginary(eps)) - c).abs());
    }

    let point = g2(1.0, &em, 0.0, EffectiveRabi::real(PI));
    // Γ = (1/2 + 1)/2 = 3/4; cos π = −1 and sin π = 0 leave 1 + e^{-3/4}.
    let oracle = 1.0 + (-0.75f64).exp();
    let point_ok = (point - oracle).abs() < 1e-6 && (point - 1.4724).abs() < 5e-5;

    Outcome {
        id: "4",
        title: "g2 structure: g2(0)=0, tail 1, continuity at Omega_eff->0, g2(1 ns) hand value",
        pass: zero_ok && tail_err < 1e-6 && cont < 1e-9 && point_ok,
        detail: format!(
            "g2(0)=0 exact: {zero_ok}; max |g2(inf)-1| {tail_err:.2e}; continuity gap {cont:.2e}; g2(1 ns) = {point:.9} (1+e^-0.75 = {oracle:.9}, quoted 1.4724)"
        ),
    }
}

// ---------------------------------------------------------------------- 5

fn decay_slope_property() -> Outcome {
    // Stationary variance of a 1.3116 GHz Gaussian line.
    let variance = (1.3116f64 / 2.354_820_045).powi(2);
    let omegas: Vec<f64> = (0..6).map(|i| TAU * 10f64.powf(i as f64 / 5.0)).collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for c in [0.05, 0.5, 2.0] {
        match decay_sweep(T1, T2, &omegas, variance, c).and_then(|f| decay_slope(&f)) {
            Ok((slope, _, r2)) => {
                let err = rel(slope, c / 2.0);
                ok &= err.abs() < 0.03 && r2 > 0.99;
                lines.push(format!(
                    "c={c}: slope {slope:.5} (c/2 {:.5}, {:+.3}%), R^2 {r2:.6}",
                    c / 2.0,
                    100.0 * err
                ));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("c={c}: {e}"));
            }
        }
    }
    Outcome {
        id: "5",
        title: "decay rate vs Omega_R affine with slope c/2 within 3%, R^2 > 0.99 over a decade",
        pass: ok,
        detail: lines.join("; "),
    }
}

// ---------------------------------------------------------------------- 6

fn critical_temperature(curve: &[CalibrationResult], model: &DephasingModel) -> Outcome {
    let law = BroadeningLaw::default();
    match crossover_temperature(model, curve, &law, &CrossoverCriterion::default()) {
        Ok(x) => Outcome {
            id: "6",
            title: "crossover temperature 25.91 +/- 0.5 K with the anchored kappa",
            pass: (x.t_crit - 25.91).abs() < 0.5,
            detail: format!(
                "T_crit {:.3} K (coefficient root {:.3} K, FWHM {:.4} GHz, kappa {DEFAULT_KAPPA})",
                x.t_crit, x.t_root, x.fwhm
            ),
        },
        Err(e) => Outcome {
            id: "6",
            title: "crossover temperature 25.91 +/- 0.5 K with the anchored kappa",
            pass: false,
            detail: e.to_string(),
        },
    }
}

// ---------------------------------------------------------------------- 7

fn fwhm(p: &NoiseParams, grid: &SimGrid) -> f64 {
    measure(p, grid, JumpScheme::Bernoulli, BinRule::Auto).unwrap().fit.fwhm
}

fn scan_signatures() -> Outcome {
    let grid = SimGrid::default().with_trajectories(10_000).with_seed(3);
    let sigmas = [0.1, 0.5, 1.0, 2.0];
    let fw_s: Vec<f64> = sigmas
        .iter()
        .map(|&s| fwhm(&NoiseParams::ou(0.0, 0.01, s), &grid))
        .collect();
    let (_, _, r2) = linear_fit(&sigmas, &fw_s);

    let taus: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
    let fw_t: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let burn_in = (5.0 * tau).max(1.0);
            let g = SimGrid {
                dt: (1e-3f64).min(tau / 20.0),
                burn_in,
                window: burn_in + 9.0,
                n_traj: 2_000,
                seed: 4,
            };
            fwhm(&NoiseParams::ou(0.0, tau, 1.0), &g)
        })
        .collect();
    let spread = fw_t.iter().cloned().fold(0.0, f64::max) / fw_t.iter().cloned().fold(f64::MAX, f64::min);

    let base = Baseline::default();
    let em = EmitterParams::with_rabi_ghz(T1, T2, 4.0);
    let rates: Vec<f64> = [1e5, 1e6, 1e7, 1e8, 1e9, 1e10]
        .iter()
        .map(|&l| {
            let p = NoiseParams::new(0.0, base.tau_sd, base.sigma0, l, 0.5);
            envelope_rate(
                &em,
                gamma_coeff_scaled(&p, DEFAULT_KAPPA, DEFAULT_REFERENCE_JUMP_VARIANCE) * em.omega_r,
            )
        })
        .collect();
    let increasing = rates.windows(2).all(|w| w[1] > w[0]);

    Outcome {
        id: "7",
        title: "scans: FWHM linear in sigma, flat in tau_sd without jumps, g2 damping rising with lambda_J",
        pass: r2 > 0.98 && spread < 1.2 && increasing,
        detail: format!(
            "R^2 {r2:.5} over {fw_s:.4?}; tau_sd max/min {spread:.4} over {fw_t:.4?}; envelope rates {rates:.4?}"
        ),
    }
}

// ---------------------------------------------------------------------- 8

fn run_cli(out: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_specdiff"))
        .env_remove("SPECDIFF_THREADS")
        .arg("--out")
        .arg(out)
        .arg("--config")
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|d| d.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    v.sort();
    v
}

fn determinism() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/calibration_default.csv");
    let fix = fixture.to_str().unwrap();
    let cmds: [&[&str]; 6] = [
        &["--seed", "7", "simulate", "--n-traj", "500"],
        &[
            "--seed",
            "7",
            "calibrate",
            "--temps",
            "5,20",
            "--n-traj",
            "2000",
            "--max-evals",
            "8",
        ],
        &["g2", "--T", "5,20,30", "--calibration", fix],
        &["crossover", "--calibration", fix],
        &[
            "--seed", "7", "scan", "--vary", "sigma-j", "--values", "0.5,1", "--n-traj", "500",
        ],
        &["--seed", "7", "compare-ou", "--n-traj", "500"],
    ];
    let dir = std::env::temp_dir().join(format!("specdiff-acceptance-{}", std::process::id()));
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, args) in cmds.iter().enumerate() {
        let (a, b) = (dir.join(format!("{i}a")), dir.join(format!("{i}b")));
        let (ca, cb) = (run_cli(&a, args), run_cli(&b, args));
        let files = csv_files(&a);
        let same = ca == cb
            && !files.is_empty()
            && files.len() == csv_files(&b).len()
            && files
                .iter()
                .all(|f| fs::read(f).ok() == fs::read(b.join(f.file_name().unwrap())).ok());
        ok &= same && (ca == 0 || (i == 1 && ca == 4));
        notes.push(format!(
            "{} exit {ca} {} csv {}",
            args[if args[0] == "--seed" { 2 } else { 0 }],
            files.len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    let _ = fs::remove_dir_all(&dir);

    let p = NoiseParams::new(0.0, 0.5, 0.8, 2e10, 0.1);
    let grid = SimGrid::default().with_trajectories(4_000).with_seed(21);
    let stats = |s: JumpScheme| {
        let c = jump_counts(&p, &grid, s).unwrap();
        let n = c.len() as f64;
        let m = c.iter().sum::<u64>() as f64 / n;
        let v = c.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    };
    let (mb, sb) = stats(JumpScheme::Bernoulli);
    let (mh, sh) = stats(JumpScheme::Hazard);
    let z = (mb - mh).abs() / sb.hypot(sh);
    ok &= z < 3.0;
    Outcome {
        id: "8",
        title: "byte-identical CSVs for every subcommand; Bernoulli and hazard jump counts agree",
        pass: ok,
        detail: format!(
            "{}; mean jumps {mb:.3} +/- {sb:.3} vs {mh:.3} +/- {sh:.3} ({z:.2} combined SE)",
            notes.join(", ")
        ),
    }
}

fn main() {
    // Respect `cargo test -- <filter>` style invocations that target other
    // test binaries: run only when unfiltered or asked for by name.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let t0 = Instant::now();
    let base = Baseline::default();
    let law = BroadeningLaw::default();
    let cfg = CalibConfig::default();

    let mut results = Vec::new();
    let (c1, c1b) = stationary_variance();
    results.push(c1);
    results.push(c1b);
    let three = calibrate_curve(&[5.0, 20.0, 30.0], &base, &law, &cfg).expect("three-point calibration");
    results.push(linewidth_reproduction(&three));
    let curve = calibrate_curve(&DEFAULT_CURVE_TEMPS, &base, &law, &cfg).expect("curve calibration");
    let model = DephasingModel::from_calibration(&curve, DEFAULT_KAPPA).unwrap();
    results.push(limits(&curve, &model));
    results.push(g2_structure());
    results.push(decay_slope_property());
    results.push(critical_temperature(&curve, &model));
    results.push(scan_signatures());
    results.push(determinism());

    let mut failed = false;
    println!();
    for r in &results {
        let expected_fail = KNOWN_FAILING.contains(&r.id);
        println!(
            "{} criterion {}: {}{}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.title,
            if expected_fail && !r.pass {
                " (known failure)"
            } else {
                ""
            }
        );
        println!("    {}", r.detail);
        if r.pass == expected_fail {
            failed = true;
            if r.pass {
                println!("    criterion {} was expected to fail; revisit KNOWN_FAILING", r.id);
            }
        }
    }
    println!("acceptance finished in {:.1} s", t0.elapsed().as_secs_f64());
    if failed {
        std::process::exit(1);
    }
}
