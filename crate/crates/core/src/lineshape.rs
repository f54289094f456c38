//! Stationary detuning distributions: histograms, Gaussian fits, moments and
//! the closed-form stationary variance.
//!
//! The continuous-time process behind [`crate::sde`] has stationary variance
//!
//! ```text
//! Var = S²/4 + λ_J·σ_J²·τ_sd/2
//! ```
//!
//! (diffusion coefficient S²/(2τ_sd) times τ_sd/2, plus Campbell's theorem for
//! exponentially relaxing jumps). The explicit Euler recursion itself is an
//! AR(1) process whose exact stationary variance is
//! `(S²/2 + λ_J·σ_J²·τ_sd) / (2 − dt/τ_sd)`, which tends to the value above
//! as dt/τ_sd → 0. Both are exposed: [`analytic_variance`] and
//! [`discrete_variance`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_line, fmt_sig};
use crate::params::{NoiseParams, SimGrid};
use crate::sde::{fold_trajectories, JumpScheme, TrajectoryEnsemble};

/// FWHM / σ for a Gaussian: 2·√(2 ln 2).
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Minimum pooled sample count accepted by the histogram builders.
pub const MIN_POOLED_SAMPLES: u64 = 1000;
/// Floor on the automatic bin count.
pub const MIN_AUTO_BINS: usize = 64;
/// Ceiling on the automatic bin count (heavy tails can make
/// Freedman–Diaconis ask for millions of bins).
pub const MAX_AUTO_BINS: usize = 10_000;
/// Minimum number of occupied bins for a Gaussian fit.
pub const MIN_FIT_BINS: usize = 8;
/// Size of the systematic subsample used to estimate the interquartile range
/// when statistics are streamed.
const QUANTILE_SUBSAMPLE: u64 = 1 << 20;

/// Stationary variance of the diffusion part, S²/4 (GHz²).
pub fn diffusion_variance(params: &NoiseParams) -> f64 {
    params.diffusion * params.diffusion / 4.0
}

/// Stationary variance contributed by jumps, λ_J·σ_J²·τ_sd/2 (GHz²).
pub fn jump_variance(params: &NoiseParams) -> f64 {
    params.jump_rate * params.jump_sigma * params.jump_sigma * params.tau_sd / 2.0
}

/// Continuous-time stationary variance of the detuning (GHz²).
pub fn analytic_variance(params: &NoiseParams) -> f64 {
    diffusion_variance(params) + jump_variance(params)
}

/// Exact stationary variance of the Euler recursion at step `dt` (GHz²).
pub fn discrete_variance(params: &NoiseParams, dt: f64) -> f64 {
    2.0 * analytic_variance(params) / (2.0 - dt / params.tau_sd)
}

/// Gaussian FWHM for a variance in GHz².
pub fn fwhm_from_variance(variance: f64) -> f64 {
    FWHM_PER_SIGMA * variance.max(0.0).sqrt()
}

/// FWHM predicted from [`analytic_variance`].
pub fn analytic_fwhm(params: &NoiseParams) -> f64 {
    fwhm_from_variance(analytic_variance(params))
}

/// Mergeable power sums about a fixed shift.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentSums {
    pub shift: f64,
    pub count: u64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl MomentSums {
    pub fn new(shift: f64) -> Self {
        Self {
            shift,
            ..Default::default()
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let d = x - self.shift;
        let d2 = d * d;
        self.count += 1;
        self.s1 += d;
        self.s2 += d2;
        self.s3 += d2 * d;
        self.s4 += d2 * d2;
    }

    /// Add a slice, summing locally first.
    pub fn extend(&mut self, xs: &[f64]) {
        let mut local = MomentSums::new(self.shift);
        for &x in xs {
            local.push(x);
        }
        self.merge(&local);
    }

    pub fn merge(&mut self, other: &MomentSums) {
        debug_assert_eq!(self.shift.to_bits(), other.shift.to_bits());
        self.count += other.count;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
    }

    pub fn moments(&self) -> SampleMoments {
        let n = self.count as f64;
        if self.count == 0 {
            return SampleMoments::default();
        }
        let m1 = self.s1 / n;
        let r2 = self.s2 / n;
        let r3 = self.s3 / n;
        let r4 = self.s4 / n;
        let var = (r2 - m1 * m1).max(0.0);
        let c3 = r3 - 3.0 * m1 * r2 + 2.0 * m1.powi(3);
        let c4 = r4 - 4.0 * m1 * r3 + 6.0 * m1 * m1 * r2 - 3.0 * m1.powi(4);
        let (skewness, excess_kurtosis) = if var > 0.0 {
            (c3 / var.powf(1.5), c4 / (var * var) - 3.0)
        } else {
            (0.0, 0.0)
        };
        SampleMoments {
            count: self.count,
            mean: self.shift + m1,
            variance: var,
            skewness,
            excess_kurtosis,
        }
    }
}

/// Population moments of pooled samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: u64,
    /// GHz.
    pub mean: f64,
    /// GHz².
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl SampleMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// How to choose the histogram binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BinRule {
    /// Freedman–Diaconis, floored at [`MIN_AUTO_BINS`].
    #[default]
    Auto,
    Fixed(usize),
}

/// Uniform-width histogram of pooled detuning samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges (GHz), strictly increasing and uniform.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Moments of the pooled samples the histogram was built from.
    pub moments: SampleMoments,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.edges[self.edges.len() - 1] - self.edges[0]) / self.n_bins() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.n_bins())
            .map(|i| self.edges[0] + (i as f64 + 0.5) * w)
            .collect()
    }

    /// Probability density per bin, counts / (total · width) (1/GHz).
    pub fn densities(&self) -> Vec<f64> {
        let norm = self.total as f64 * self.bin_width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// CSV with header `omega_GHz,density` (bin centres).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"omega_GHz,density\n")?;
        for (x, d) in self.centers().into_iter().zip(self.densities()) {
            w.write_all(csv_line([fmt_sig(x), fmt_sig(d)]).as_bytes())?;
        }
        Ok(())
    }
}

/// Uniform edges over [lo, hi]; a zero-width range becomes one narrow bin.
fn uniform_edges(lo: f64, hi: f64, n_bins: usize) -> Vec<f64> {
    if hi <= lo {
        let half = 0.5e-9 * lo.abs().max(1.0);
        return vec![lo - half, lo + half];
    }
    let w = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * w).collect();
    edges[n_bins] = hi;
    edges
}

#[inline]
fn bin_index(x: f64, lo: f64, inv_w: f64, n: usize) -> usize {
    let k = ((x - lo) * inv_w).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

/// Freedman–Diaconis bin count for `n` samples over `range` given the IQR
/// (Scott's rule with `std` when the IQR collapses).
fn auto_bins(n: u64, range: f64, iqr: f64, std: f64) -> usize {
    if range <= 0.0 {
        return 1;
    }
    let cbrt_n = (n as f64).cbrt();
    let h = if iqr > 0.0 {
        2.0 * iqr / cbrt_n
    } else {
        3.49 * std / cbrt_n
    };
    if h <= 0.0 || !h.is_finite() {
        return MIN_AUTO_BINS;
    }
    ((range / h).ceil() as usize).clamp(MIN_AUTO_BINS, MAX_AUTO_BINS)
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn iqr_of(mut v: Vec<f64>) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

/// Histogram of arbitrary pooled samples.
pub fn histogram_from_samples(samples: &[f64], bins: BinRule) -> Result<Histogram> {
    let n = samples.len() as u64;
    if n < MIN_POOLED_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} pooled samples, need at least {MIN_POOLED_SAMPLES}"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mut sums = MomentSums::new(samples[0]);
    sums.extend(samples);
    let moments = sums.moments();
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let n_bins = match bins {
        BinRule::Fixed(k) if k > 0 => k,
        BinRule::Fixed(_) => return Err(Error::invalid("bin count must be positive")),
        BinRule::Auto => auto_bins(n, hi - lo, iqr_of(samples.to_vec()), moments.std_dev()),
    };
    let edges = uniform_edges(lo, hi, if hi > lo { n_bins } else { 1 });
    let mut counts = vec![0u64; edges.len() - 1];
    let nb = counts.len();
    let inv_w = nb as f64 / (edges[nb] - edges[0]);
    for &x in samples {
        counts[bin_index(x, edges[0], inv_w, nb)] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        total: n,
        moments,
    })
}

/// Histogram of the pooled post-burn-in samples of a stored ensemble.
pub fn build_histogram(ensemble: &TrajectoryEnsemble, bins: BinRule) -> Result<Histogram> {
    let pooled: Vec<f64> = ensemble.pooled_stationary().collect();
    histogram_from_samples(&pooled, bins)
}

/// Result of a least-squares Gaussian fit plus moment diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    /// Centre (GHz).
    pub mu: f64,
    /// Standard deviation (GHz).
    pub sigma_fit: f64,
    /// Peak density (1/GHz).
    pub amplitude: f64,
    /// 2·√(2 ln 2)·σ_fit (GHz).
    pub fwhm: f64,
    /// One-sigma uncertainty of `fwhm` from the fit covariance (GHz).
    pub fwhm_stderr: f64,
    /// RMS of density residuals over all bins (1/GHz).
    pub residual_rms: f64,
    /// Sample skewness of the pooled data.
    pub skewness: f64,
    /// Sample excess kurtosis of the pooled data.
    pub excess_kurtosis: f64,
    pub iterations: usize,
}

/// The JSON fit summary written next to histogram CSVs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub mu: f64,
    pub sigma_fit: f64,
    pub fwhm: f64,
    pub residual_rms: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl From<&GaussianFit> for FitSummary {
    fn from(f: &GaussianFit) -> Self {
        Self {
            mu: f.mu,
            sigma_fit: f.sigma_fit,
            fwhm: f.fwhm,
            residual_rms: f.residual_rms,
            skewness: f.skewness,
            excess_kurtosis: f.excess_kurtosis,
        }
    }
}

const FIT_MAX_ITER: usize = 200;

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                let pivot = m[col];
                for (x, p) in m[row].iter_mut().zip(pivot).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn invert3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let col = solve3(a, e)?;
        for i in 0..3 {
            inv[i][k] = col[i];
        }
    }
    Some(inv)
}

/// Sum of squared residuals and the normal equations at `p = (a, μ, σ)`.
fn normal_equations(x: &[f64], y: &[f64], p: [f64; 3]) -> (f64, [[f64; 3]; 3], [f64; 3]) {
    let [a, mu, s] = p;
    let (mut cost, mut jtj, mut jtr) = (0.0, [[0.0; 3]; 3], [0.0; 3]);
    let inv_s2 = 1.0 / (s * s);
    for (&xi, &yi) in x.iter().zip(y) {
        let d = xi - mu;
        let e = (-0.5 * d * d * inv_s2).exp();
        let r = a * e - yi;
        let j = [e, a * e * d * inv_s2, a * e * d * d * inv_s2 / s];
        cost += r * r;
        for u in 0..3 {
            jtr[u] += j[u] * r;
            for v in 0..3 {
                jtj[u][v] += j[u] * j[v];
            }
        }
    }
    (cost, jtj, jtr)
}

/// Least-squares fit of `a·exp(−(x−μ)²/(2σ²))` to the bin densities by
/// Levenberg–Marquardt, started from the pooled sample mean and standard
/// deviation. Skewness and kurtosis are taken from the pooled samples.
pub fn fit_gaussian(hist: &Histogram) -> Result<GaussianFit> {
    let occupied = hist.occupied_bins();
    if occupied < MIN_FIT_BINS {
        return Err(Error::InsufficientData(format!(
            "{occupied} occupied bins, need at least {MIN_FIT_BINS}"
        )));
    }
    let x = hist.centers();
    let y = hist.densities();
    let mom = hist.moments;
    let fallback_fwhm = FWHM_PER_SIGMA * mom.std_dev();
    let s0 = mom.std_dev().max(hist.bin_width());
    let mut p = [1.0 / (s0 * (2.0 * std::f64::consts::PI).sqrt()), mom.mean, s0];

    let (mut cost, mut jtj, mut jtr) = normal_equations(&x, &y, p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITER {
        iterations += 1;
        let mut a = jtj;
        for (k, row) in a.iter_mut().enumerate() {
            row[k] += lambda * jtj[k][k].max(1e-300);
        }
        let Some(delta) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
            lambda *= 10.0;
            continue;
        };
        let trial = [p[0] + delta[0], p[1] + delta[1], (p[2] + delta[2]).abs()];
        let (c_new, jtj_new, jtr_new) = normal_equations(&x, &y, trial);
        if c_new.is_finite() && c_new <= cost {
            let rel_step = (0..3)
                .map(|k| (delta[k] / trial[k].abs().max(1e-300)).abs())
                .fold(0.0, f64::max);
            let rel_cost = (cost - c_new) / cost.max(1e-300);
            p = trial;
            cost = c_new;
            jtj = jtj_new;
            jtr = jtr_new;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < 1e-10 || rel_cost < 1e-14 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // No descent direction left: stationary point.
                converged = true;
                break;
            }
        }
    }
    let [amplitude, mu, sigma] = p;
    if !converged || !(sigma > 0.0 && sigma.is_finite() && amplitude > 0.0) {
        return Err(Error::FitFailure {
            iterations,
            fallback_fwhm,
        });
    }
    let dof = (x.len() as f64 - 3.0).max(1.0);
    let sigma_err = invert3(jtj)
        .map(|inv| (cost / dof * inv[2][2]).max(0.0).sqrt())
        .unwrap_or(f64::NAN);
    Ok(GaussianFit {
        mu,
        sigma_fit: sigma,
        amplitude,
        fwhm: FWHM_PER_SIGMA * sigma,
        fwhm_stderr: FWHM_PER_SIGMA * sigma_err,
        residual_rms: (cost / x.len() as f64).sqrt(),
        skewness: mom.skewness,
        excess_kurtosis: mom.excess_kurtosis,
        iterations,
    })
}

/// Histogram, Gaussian fit and pooled moments of one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub params: NoiseParams,
    pub histogram: Histogram,
    pub fit: GaussianFit,
    /// Mean jump events per trajectory.
    pub mean_jumps: f64,
    /// Closed-form variance for the same parameters (GHz²).
    pub analytic_variance: f64,
}

impl LineShape {
    pub fn fwhm(&self) -> f64 {
        self.fit.fwhm
    }

    pub fn moments(&self) -> SampleMoments {
        self.histogram.moments
    }
}

/// First-pass statistics of a streamed ensemble.
#[derive(Debug, Clone)]
pub struct StreamSummary {
    pub sums: MomentSums,
    pub min: f64,
    pub max: f64,
    pub jumps: u64,
    pub jump_sq: f64,
    pub n_traj: usize,
    subsample: Vec<f64>,
}

impl StreamSummary {
    pub fn moments(&self) -> SampleMoments {
        self.sums.moments()
    }

    pub fn mean_jumps(&self) -> f64 {
        self.jumps as f64 / self.n_traj as f64
    }

    /// Standard error of the mean jump count per trajectory.
    pub fn jump_count_stderr(&self) -> f64 {
        let n = self.n_traj as f64;
        let m = self.mean_jumps();
        ((self.jump_sq / n - m * m).max(0.0) / (n - 1.0).max(1.0)).sqrt()
    }

    fn auto_bins(&self) -> usize {
        auto_bins(
            self.sums.count,
            self.max - self.min,
            iqr_of(self.subsample.clone()),
            self.moments().std_dev(),
        )
    }
}

/// Pooled moments, range and jump statistics of the post-burn-in samples,
/// computed in one streaming pass.
pub fn stream_summary(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme) -> Result<StreamSummary> {
    let skip = grid.first_stationary_index();
    let per_traj = grid.stationary_samples_per_trajectory() as u64;
    let stride = (grid.n_traj as u64 * per_traj).div_ceil(QUANTILE_SUBSAMPLE).max(1) as usize;
    let shift = params.omega0;
    fold_trajectories(
        params,
        grid,
        scheme,
        || StreamSummary {
            sums: MomentSums::new(shift),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            jumps: 0,
            jump_sq: 0.0,
            n_traj: 0,
            subsample: Vec::new(),
        },
        |acc, index, traj, jumps| {
            let stat = &traj[skip..];
            acc.sums.extend(stat);
            for &x in stat {
                acc.min = acc.min.min(x);
                acc.max = acc.max.max(x);
            }
            // Systematic subsample, offset per trajectory so that a stride
            // larger than one never aliases onto the same time points.
            let offset = index % stride;
            acc.subsample.extend(stat.iter().skip(offset).step_by(stride));
            acc.jumps += jumps;
            acc.jump_sq += (jumps * jumps) as f64;
            acc.n_traj += 1;
        },
        |acc, other| {
            acc.sums.merge(&other.sums);
            acc.min = acc.min.min(other.min);
            acc.max = acc.max.max(other.max);
            acc.jumps += other.jumps;
            acc.jump_sq += other.jump_sq;
            acc.n_traj += other.n_traj;
            acc.subsample.extend(other.subsample);
        },
    )
}

fn stream_counts(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme, edges: &[f64]) -> Result<Vec<u64>> {
    let skip = grid.first_stationary_index();
    let nb = edges.len() - 1;
    let lo = edges[0];
    let inv_w = nb as f64 / (edges[nb] - lo);
    fold_trajectories(
        params,
        grid,
        scheme,
        || vec![0u64; nb],
        |acc, _, traj, _| {
            for &x in &traj[skip..] {
                acc[bin_index(x, lo, inv_w, nb)] += 1;
            }
        },
        |acc, other| {
            for (a, b) in acc.iter_mut().zip(other) {
                *a += b;
            }
        },
    )
}

fn check_pooled(grid: &SimGrid) -> Result<()> {
    let pooled = grid.n_traj as u64 * grid.stationary_samples_per_trajectory() as u64;
    if pooled < MIN_POOLED_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{pooled} pooled post-burn-in samples, need at least {MIN_POOLED_SAMPLES}"
        )));
    }
    Ok(())
}

fn finish_lineshape(
    params: &NoiseParams,
    summary: &StreamSummary,
    edges: Vec<f64>,
    counts: Vec<u64>,
) -> Result<LineShape> {
    let histogram = Histogram {
        edges,
        total: counts.iter().sum(),
        counts,
        moments: summary.moments(),
    };
    let fit = fit_gaussian(&histogram)?;
    Ok(LineShape {
        params: *params,
        histogram,
        fit,
        mean_jumps: summary.mean_jumps(),
        analytic_variance: analytic_variance(params),
    })
}

/// Simulate an ensemble and reduce it to a [`LineShape`] without storing the
/// trajectories. The ensemble is generated twice (range, then counts); both
/// passes replay identical random streams.
pub fn measure(params: &NoiseParams, grid: &SimGrid, scheme: JumpScheme, bins: BinRule) -> Result<LineShape> {
    check_pooled(grid)?;
    let summary = stream_summary(params, grid, scheme)?;
    let n_bins = match bins {
        BinRule::Fixed(k) if k > 0 => k,
        BinRule::Fixed(_) => return Err(Error::invalid("bin count must be positive")),
        BinRule::Auto => summary.auto_bins(),
    };
    let edges = uniform_edges(
        summary.min,
        summary.max,
        if summary.max > summary.min { n_bins } else { 1 },
    );
    let counts = stream_counts(params, grid, scheme, &edges)?;
    finish_lineshape(params, &summary, edges, counts)
}

/// Hybrid ensemble next to a pure-OU ensemble with the same closed-form
/// variance, histogrammed on a shared bin grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuComparison {
    pub hybrid: LineShape,
    pub ou: LineShape,
    /// Target variance shared by both models (GHz²).
    pub target_variance: f64,
}

impl OuComparison {
    /// CSV with header `omega_GHz,density_hybrid,density_ou`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"omega_GHz,density_hybrid,density_ou\n")?;
        let xs = self.hybrid.histogram.centers();
        let dh = self.hybrid.histogram.densities();
        let dou = self.ou.histogram.densities();
        for i in 0..xs.len() {
            w.write_all(csv_line([fmt_sig(xs[i]), fmt_sig(dh[i]), fmt_sig(dou[i])]).as_bytes())?;
        }
        Ok(())
    }
}

/// Pure-OU parameters with the same stationary variance as `params`.
pub fn matched_ou(params: &NoiseParams) -> NoiseParams {
    NoiseParams::ou(params.omega0, params.tau_sd, 2.0 * analytic_variance(params).sqrt())
}

pub fn compare_ou_vs_hybrid(
    params_hybrid: &NoiseParams,
    grid: &SimGrid,
    scheme: JumpScheme,
    bins: BinRule,
) -> Result<OuComparison> {
    check_pooled(grid)?;
    params_hybrid.validate(false)?;
    let ou_params = matched_ou(params_hybrid);
    let s_h = stream_summary(params_hybrid, grid, scheme)?;
    let s_o = stream_summary(&ou_params, grid, scheme)?;
    let lo = s_h.min.min(s_o.min);
    let hi = s_h.max.max(s_o.max);
    let n_bins = match bins {
        BinRule::Fixed(k) if k > 0 => k,
        BinRule::Fixed(_) => return Err(Error::invalid("bin count must be positive")),
        BinRule::Auto => {
            // Keep the finer of the two Freedman–Diaconis widths over the union range.
            let w_h = (s_h.max - s_h.min) / s_h.auto_bins() as f64;
            let w_o = (s_o.max - s_o.min) / s_o.auto_bins() as f64;
            (((hi - lo) / w_h.min(w_o)).ceil() as usize).clamp(MIN_AUTO_BINS, MAX_AUTO_BINS)
        }
    };
    let edges = uniform_edges(lo, hi, n_bins);
    let c_h = stream_counts(params_hybrid, grid, scheme, &edges)?;
    let c_o = stream_counts(&ou_params, grid, scheme, &edges)?;
    Ok(OuComparison {
        hybrid: finish_lineshape(params_hybrid, &s_h, edges.clone(), c_h)?,
        ou: finish_lineshape(&ou_params, &s_o, edges, c_o)?,
        target_variance: analytic_variance(params_hybrid),
    })
}
