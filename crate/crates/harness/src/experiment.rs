//! Monte Carlo experiments: convergence traces, N and SNR sweeps, and the
//! Θ-update timing profile. Every experiment writes one CSV.

use std::path::PathBuf;
use std::time::Instant;

use bdris_core::model::{self, generate_channels};
use bdris_core::psla::{default_init, psla_theta, psla_w_with};
use bdris_core::{fp, solve_fp_psla, SolverOptions, SolverReport, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csv::{fmt_seconds, fmt_value, provenance_line, write_csv};
use crate::error::{Error, Result};

/// Environment variable that overrides the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BDRIS_OUTPUT_DIR";

/// Minimum accumulated wall time per timing sample.
const MIN_TIMING_SECS: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    Convergence,
    SweepN,
    SweepSnr,
    Timing,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Convergence => "convergence",
            Mode::SweepN => "sweep_n",
            Mode::SweepSnr => "sweep_snr",
            Mode::Timing => "timing",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Mode::Single => Vec::new(),
            Mode::Convergence => vec![0.0, 10.0, 20.0],
            Mode::SweepN => vec![16.0, 32.0, 64.0, 128.0],
            Mode::SweepSnr => vec![0.0, 5.0, 10.0, 15.0, 20.0],
            Mode::Timing => vec![16.0, 32.0, 64.0, 128.0, 256.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub trials: usize,
    pub sweep_values: Vec<f64>,
    pub base_config: SystemConfig,
    pub output_path: PathBuf,
    pub parallel_workers: usize,
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"))
}

impl ExperimentSpec {
    /// 100 trials, the mode's default grid, one worker per core, output to
    /// `<output dir>/<mode>.csv`.
    pub fn new(mode: Mode, base_config: SystemConfig) -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self {
            mode,
            trials: 100,
            sweep_values: mode.default_values(),
            base_config,
            output_path: default_output_dir().join(format!("{}.csv", mode.name())),
            parallel_workers: workers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_config.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.parallel_workers == 0 {
            return Err(Error::InvalidSpec("workers must be at least 1".into()));
        }
        if self.mode != Mode::Single && self.sweep_values.is_empty() {
            return Err(Error::InvalidSpec(format!("{} needs at least one sweep value", self.mode.name())));
        }
        if let Some(v) = self.sweep_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("sweep value {v} is not finite")));
        }
        if matches!(self.mode, Mode::SweepN | Mode::Timing) {
            for &v in &self.sweep_values {
                element_count(v)?;
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.base_config.rng_seed
    }

    fn trial_seed(&self, trial: usize) -> u64 {
        trial_seed(self.seed(), trial)
    }

    fn provenance(&self) -> String {
        provenance_line(&self.base_config, self.seed())
    }
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

fn element_count(v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidSpec(format!("N = {v} is not a positive integer")))
    }
}

fn config_for_n(base: &SystemConfig, n: usize) -> SystemConfig {
    base.clone().with_dims(base.bs_antennas, n, base.users)
}

/// Draws channels from `seed`, initializes, and runs FP-PSLA with the
/// config's tolerances.
pub fn solve_trial(config: &SystemConfig, seed: u64) -> Result<SolverReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = generate_channels(config, &mut rng)?;
    let init = default_init(&channels, config)?;
    Ok(solve_fp_psla(&channels, config, &SolverOptions::from_config(config), &init)?)
}

/// Runs `job(trial)` for every trial on a pool of `workers` threads and
/// returns results in trial order.
pub fn run_trials<T, F>(trials: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..trials).map(&job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| (0..trials).into_par_iter().map(&job).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleRow {
    pub trial: usize,
    pub seed: u64,
    pub outer_iters: usize,
    pub converged: bool,
    pub initial_wsr: f64,
    pub final_wsr: f64,
    pub elapsed_s: f64,
}

pub fn run_single(spec: &ExperimentSpec) -> Result<Vec<SingleRow>> {
    spec.validate()?;
    let config = &spec.base_config;
    let rows = run_trials(spec.trials, spec.parallel_workers, |trial| {
        let seed = spec.trial_seed(trial);
        let report = solve_trial(config, seed)?;
        Ok(SingleRow {
            trial,
            seed,
            outer_iters: report.outer_iters,
            converged: report.termination == bdris_core::Termination::Converged,
            initial_wsr: report.initial_wsr,
            final_wsr: report.final_wsr,
            elapsed_s: report.wall_time_total,
        })
    })?;
    let header = ["trial", "seed", "outer_iters", "termination", "initial_wsr", "final_wsr", "elapsed_s"];
    let lines: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.seed.to_string(),
                r.outer_iters.to_string(),
                if r.converged { "converged" } else { "max_iters" }.to_string(),
                fmt_value(r.initial_wsr),
                fmt_value(r.final_wsr),
                fmt_seconds(r.elapsed_s),
            ]
        })
        .collect();
    write_csv(&spec.output_path, &spec.provenance(), &header, &lines)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub snr_db: f64,
    pub trial: usize,
    pub outer_iter: usize,
    pub wsr: f64,
    pub elapsed_s: f64,
}

/// One row per outer iteration of every (SNR, trial) solve.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &snr_db in &spec.sweep_values {
        let config = spec.base_config.clone().with_snr_db(snr_db);
        let reports = run_trials(spec.trials, spec.parallel_workers, |trial| {
            solve_trial(&config, spec.trial_seed(trial))
        })?;
        for (trial, report) in reports.into_iter().enumerate() {
            let points = report.wsr_trajectory.iter().zip(&report.elapsed_trajectory);
            for (i, (&wsr, &elapsed_s)) in points.enumerate() {
                rows.push(ConvergenceRow {
                    snr_db,
                    trial,
                    outer_iter: i + 1,
                    wsr,
                    elapsed_s,
                });
            }
        }
    }
    let header = ["snr_db", "trial", "outer_iter", "wsr", "elapsed_s"];
    let lines: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.snr_db.to_string(),
                r.trial.to_string(),
                r.outer_iter.to_string(),
                fmt_value(r.wsr),
                fmt_seconds(r.elapsed_s),
            ]
        })
        .collect();
    write_csv(&spec.output_path, &spec.provenance(), &header, &lines)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean_wsr: f64,
    pub std_wsr: f64,
    pub mean_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Consecutive sweep values where the mean WSR fell by more than one
    /// standard deviation.
    pub trend_violations: Vec<(f64, f64)>,
}

/// Sample mean and (n − 1)-normalized standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn sweep(spec: &ExperimentSpec, column: &str, configure: impl Fn(f64) -> Result<SystemConfig>) -> Result<Sweep> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.sweep_values {
        let config = configure(value)?;
        let reports = run_trials(spec.trials, spec.parallel_workers, |trial| {
            solve_trial(&config, spec.trial_seed(trial))
        })?;
        let wsr: Vec<f64> = reports.iter().map(|r| r.final_wsr).collect();
        let times: Vec<f64> = reports.iter().map(|r| r.wall_time_total).collect();
        let (mean_wsr, std_wsr) = mean_std(&wsr);
        rows.push(SweepRow {
            value,
            mean_wsr,
            std_wsr,
            mean_time_s: mean_std(&times).0,
        });
    }
    let trend_violations = rows
        .windows(2)
        .filter(|w| w[1].mean_wsr < w[0].mean_wsr - w[0].std_wsr.max(w[1].std_wsr))
        .map(|w| (w[0].value, w[1].value))
        .collect();

    let header = [column, "mean_wsr", "std_wsr", "mean_time_s"];
    let lines: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.value.to_string(),
                fmt_value(r.mean_wsr),
                fmt_value(r.std_wsr),
                fmt_seconds(r.mean_time_s),
            ]
        })
        .collect();
    write_csv(&spec.output_path, &spec.provenance(), &header, &lines)?;
    Ok(Sweep { rows, trend_violations })
}

/// Final WSR and solve time versus the number of RIS elements.
pub fn run_sweep_n(spec: &ExperimentSpec) -> Result<Sweep> {
    sweep(spec, "n", |v| Ok(config_for_n(&spec.base_config, element_count(v)?)))
}

/// Final WSR and solve time versus transmit SNR in dB.
pub fn run_sweep_snr(spec: &ExperimentSpec) -> Result<Sweep> {
    sweep(spec, "snr_db", |v| Ok(spec.base_config.clone().with_snr_db(v)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub mean_inner_theta_time_s: f64,
    /// Θ-update iterations timed for this N, summed over trials.
    pub inner_iters: usize,
    /// Coefficient of variation of the per-iteration time across trials.
    pub theta_cv: f64,
    pub mean_inner_w_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingProfile {
    pub rows: Vec<TimingRow>,
    /// Least-squares slope of log(time) against log(N) for the Θ update.
    pub theta_slope: f64,
    pub w_slope: f64,
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Repeats `step` until at least [`MIN_TIMING_SECS`] have elapsed and
/// returns (seconds per iteration, iterations).
fn time_per_iteration(mut step: impl FnMut() -> Result<usize>) -> Result<(f64, usize)> {
    let start = Instant::now();
    let mut iters = 0;
    loop {
        iters += step()?;
        let elapsed = start.elapsed().as_secs_f64();
        if iters > 0 && elapsed >= MIN_TIMING_SECS {
            return Ok((elapsed / iters as f64, iters));
        }
        if iters == 0 && elapsed >= MIN_TIMING_SECS {
            return Err(Error::InvalidSpec("inner loop performed no iterations".into()));
        }
    }
}

struct TimingSample {
    theta_time: f64,
    theta_iters: usize,
    w_time: f64,
}

fn timing_sample(config: &SystemConfig, seed: u64) -> Result<TimingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = generate_channels(config, &mut rng)?;
    let init = default_init(&channels, config)?;
    let f = model::effective_channels(&channels, &init.theta)?;
    let aux = fp::update_auxiliary(&f, &init.w, config)?;
    let mats = fp::build_surrogate_matrices(&channels, &init.w, &aux, config)?;
    let (sigma1, sigma2) = fp::sigma_weights(&aux, &config.weights);
    // Force the full iteration budget so each call spends its time iterating.
    let opts = SolverOptions {
        eps_inner: f64::MIN_POSITIVE,
        ..SolverOptions::from_config(config)
    };
    let (theta_time, theta_iters) = time_per_iteration(|| Ok(psla_theta(&mats, &init.theta, &opts)?.1))?;
    let (w_time, _) = time_per_iteration(|| Ok(psla_w_with(&f, &sigma1, &sigma2, &init.w, config.pt, &opts)?.1))?;
    Ok(TimingSample {
        theta_time,
        theta_iters,
        w_time,
    })
}

/// Per-iteration wall time of the Θ and W inner loops across N.
///
/// Trials run one at a time regardless of `parallel_workers` so that the
/// timings are not disturbed by concurrent solves.
pub fn emit_timing_profile(spec: &ExperimentSpec) -> Result<TimingProfile> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.sweep_values {
        let n = element_count(value)?;
        let config = config_for_n(&spec.base_config, n);
        let samples = (0..spec.trials)
            .map(|trial| timing_sample(&config, spec.trial_seed(trial)))
            .collect::<Result<Vec<_>>>()?;
        let theta: Vec<f64> = samples.iter().map(|s| s.theta_time).collect();
        let w: Vec<f64> = samples.iter().map(|s| s.w_time).collect();
        let (mean_theta, std_theta) = mean_std(&theta);
        rows.push(TimingRow {
            n,
            mean_inner_theta_time_s: mean_theta,
            inner_iters: samples.iter().map(|s| s.theta_iters).sum(),
            theta_cv: std_theta / mean_theta,
            mean_inner_w_time_s: mean_std(&w).0,
        });
    }
    let log_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let log_theta: Vec<f64> = rows.iter().map(|r| r.mean_inner_theta_time_s.ln()).collect();
    let log_w: Vec<f64> = rows.iter().map(|r| r.mean_inner_w_time_s.ln()).collect();
    let (theta_slope, w_slope) = if rows.len() >= 2 {
        (fit_slope(&log_n, &log_theta), fit_slope(&log_n, &log_w))
    } else {
        (f64::NAN, f64::NAN)
    };

    let header = ["n", "mean_inner_theta_time_s", "inner_iters"];
    let lines: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_seconds(r.mean_inner_theta_time_s),
                r.inner_iters.to_string(),
            ]
        })
        .collect();
    write_csv(&spec.output_path, &spec.provenance(), &header, &lines)?;
    Ok(TimingProfile {
        rows,
        theta_slope,
        w_slope,
    })
}
