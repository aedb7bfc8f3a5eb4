//! Oracle verification suite. Each check compares solver output against an
//! independent reference (naive objectives, random search, closed-form
//! bounds) on seeded random instances and reports its worst case.

use std::fmt;

use bdris_core::linalg::{c, re_trace, CMat};
use bdris_core::model::{self, default_config, generate_channels, noise_for_snr_db, ChannelSet};
use bdris_core::psla::{default_init, psla_theta};
use bdris_core::{fp, oracle, projections, solve_fp_psla, SolverOptions, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::experiment::trial_seed;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

/// Unit-gain (no path loss) configuration at a common SNR.
pub fn unit_gain_config(l: usize, n: usize, k: usize, snr_db: f64) -> SystemConfig {
    default_config().with_dims(l, n, k).without_pathloss().with_snr_db(snr_db)
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, index))
}

fn min_f64(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn max_f64(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// Random channels, feasible `W` and `Θ`, per-user weights in [0.5, 2] and
/// per-user SNRs in [−10, 30] dB.
fn random_instance(l: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<(SystemConfig, ChannelSet, CMat, CMat)> {
    let mut config = unit_gain_config(l, n, k, 20.0);
    config.weights = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
    config.noise_powers = (0..k)
        .map(|_| noise_for_snr_db(config.pt, rng.random_range(-10.0..30.0)))
        .collect();
    let channels = generate_channels(&config, rng)?;
    let w = oracle::random_feasible_w(l, k, config.pt, 1, rng).remove(0);
    let theta = oracle::random_feasible_theta(n, 1, rng).remove(0);
    Ok((config, channels, w, theta))
}

/// Surrogate at the closed-form auxiliaries equals the WSR.
pub fn fp_equivalence(instances: usize, seed: u64) -> Result<Check> {
    let errors = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let (config, channels, w, theta) = random_instance(4, 4, 3, &mut rng)?;
            let f = model::effective_channels(&channels, &theta)?;
            let aux = fp::update_auxiliary(&f, &w, &config)?;
            let surrogate = fp::surrogate_value(&aux, &f, &w, &config)?;
            let wsr = fp::weighted_sum_rate(&f, &w, &config)?;
            Ok((surrogate - wsr).abs() / wsr.abs().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = max_f64(errors.into_iter());
    Ok(Check::new(
        "fp-equivalence",
        worst <= 1e-10,
        format!("{instances} instances, worst relative gap {worst:.3e} (tol 1e-10)"),
    ))
}

fn quad_trace(left: &CMat, a: &CMat, right: &CMat, b: &CMat) -> f64 {
    re_trace(&(left * a * right.adjoint() * b))
}

/// `tr(ΘAΘᴴB) ≥ 2Re tr(ΦAΘᴴB) − tr(ΦAΦᴴB)` for PSD `A`, `B`, with equality at
/// `Φ = Θ`. Even trials use Gaussian matrices, odd trials manifold points.
pub fn surrogate_bound(trials: usize, seed: u64) -> Result<Check> {
    let n = 4;
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let a = oracle::random_psd(n, rng.random_range(1..=n), &mut rng);
            let b = oracle::random_psd(n, rng.random_range(1..=n), &mut rng);
            let (theta, phi) = if i % 2 == 0 {
                (
                    model::complex_gaussian_matrix(&mut rng, n, n),
                    model::complex_gaussian_matrix(&mut rng, n, n),
                )
            } else {
                let mut pts = oracle::random_feasible_theta(n, 2, &mut rng);
                let phi = pts.pop().expect("two samples");
                (pts.pop().expect("two samples"), phi)
            };
            let lhs = quad_trace(&theta, &a, &theta, &b);
            let rhs = 2.0 * quad_trace(&phi, &a, &theta, &b) - quad_trace(&phi, &a, &phi, &b);
            let at_equality = 2.0 * quad_trace(&theta, &a, &theta, &b) - quad_trace(&theta, &a, &theta, &b);
            (lhs - rhs, (lhs - at_equality).abs())
        })
        .collect();
    let worst_gap = min_f64(results.iter().map(|r| r.0));
    let worst_eq = max_f64(results.iter().map(|r| r.1));
    Ok(Check::new(
        "surrogate-bound",
        worst_gap >= -1e-9 && worst_eq <= 1e-10,
        format!("{trials} trials, min gap {worst_gap:.3e} (tol −1e-9), equality error {worst_eq:.3e} (tol 1e-10)"),
    ))
}

/// `‖Z − Π_M(Z)‖ ≤ ‖Z − Q‖ + 1e-9` over random feasible `Q`: half Haar
/// samples, half congruence perturbations of `Π_M(Z)` at random scales.
pub fn projection_optimality(zs: usize, samples_per_z: usize, seed: u64) -> Result<Check> {
    let n = 4;
    let margins = (0..zs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let z = model::complex_gaussian_matrix(&mut rng, n, n) * c(rng.random_range(0.1..10.0), 0.0);
            let projected = projections::project_symmetric_unitary(&z)?;
            let dist = (&z - &projected).norm();
            let global = samples_per_z / 2;
            let mut margin = f64::INFINITY;
            for q in oracle::random_feasible_theta(n, global, &mut rng) {
                margin = margin.min((&z - q).norm() - dist);
            }
            for _ in global..samples_per_z {
                let scale = 10f64.powf(rng.random_range(-6.0..0.0));
                let q = oracle::perturb_theta(&projected, scale, &mut rng);
                margin = margin.min((&z - q).norm() - dist);
            }
            Ok(margin)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = min_f64(margins.into_iter());
    Ok(Check::new(
        "projection-optimality",
        worst >= -1e-9,
        format!("{zs} Z × {samples_per_z} Q, min margin {worst:.3e} (tol −1e-9)"),
    ))
}

/// Options used to run an inner loop to its fixed point.
pub fn tight_inner_options() -> SolverOptions {
    SolverOptions {
        eps_inner: 1e-12,
        max_inner_iters: 20_000,
        ..SolverOptions::default()
    }
}

/// psla_theta's objective against the best of `samples` Haar-random feasible
/// points, as `(psla − best)/|best|`.
pub fn inner_loop_dominance(instances: usize, samples: usize, seed: u64) -> Result<Check> {
    let opts = tight_inner_options();
    let margins = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let (config, channels, w, theta) = random_instance(4, 4, 3, &mut rng)?;
            let f = model::effective_channels(&channels, &theta)?;
            let aux = fp::update_auxiliary(&f, &w, &config)?;
            let mats = fp::build_surrogate_matrices(&channels, &w, &aux, &config)?;
            let (found, _) = psla_theta(&mats, &theta, &opts)?;
            let value = oracle::naive_theta_objective(&mats, &found);
            let mut best = f64::NEG_INFINITY;
            let mut remaining = samples;
            while remaining > 0 {
                let chunk = remaining.min(10_000);
                let batch = oracle::random_feasible_theta(4, chunk, &mut rng);
                if let Some((v, _)) = oracle::brute_force_theta_objective(&mats, &batch) {
                    best = best.max(v);
                }
                remaining -= chunk;
            }
            Ok((value - best) / best.abs().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = min_f64(margins.into_iter());
    Ok(Check::new(
        "inner-loop-dominance",
        worst >= -1e-3,
        format!("{instances} instances × {samples} samples, worst relative margin {worst:.3e} (tol −1e-3)"),
    ))
}

fn single_user_rate(channels: &ChannelSet, theta: &CMat, config: &SystemConfig) -> f64 {
    // MRT is optimal for one user, so the rate depends on ‖EᴴΘᴴh‖ only.
    let h = CMat::from_fn(channels.h.nrows(), 1, |i, _| channels.h[(i, 0)]);
    let theta_h = CMat::from_fn(theta.nrows(), theta.ncols(), |i, j| theta[(j, i)].conj());
    let e_h = CMat::from_fn(channels.e.ncols(), channels.e.nrows(), |i, j| channels.e[(j, i)].conj());
    let f = oracle::naive_matmul(&e_h, &oracle::naive_matmul(&theta_h, &h));
    let gain: f64 = f.iter().map(|z| z.norm_sqr()).sum();
    (config.pt * gain / config.noise_powers[0]).ln_1p() / std::f64::consts::LN_2
}

/// The single-user bound is approached by random search at N = 3:
/// `(bound − best)/bound` over `samples` Haar points per instance.
pub fn single_user_achievability(instances: usize, samples: usize, seed: u64) -> Result<Check> {
    let config = unit_gain_config(4, 3, 1, 20.0);
    let gaps = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let channels = generate_channels(&config, &mut rng)?;
            let bound = oracle::single_user_bound(&channels, &config)?;
            let mut best = f64::NEG_INFINITY;
            let mut remaining = samples;
            while remaining > 0 {
                let chunk = remaining.min(10_000);
                for theta in oracle::random_feasible_theta(3, chunk, &mut rng) {
                    best = best.max(single_user_rate(&channels, &theta, &config));
                }
                remaining -= chunk;
            }
            Ok(((bound - best) / bound, best <= bound * (1.0 + 1e-12)))
        })
        .collect::<Result<Vec<(f64, bool)>>>()?;
    let worst = max_f64(gaps.iter().map(|g| g.0));
    let bounded = gaps.iter().all(|g| g.1);
    Ok(Check::new(
        "single-user-achievability",
        worst <= 5e-3 && bounded,
        format!(
            "N=3, {instances} instances × {samples} samples, worst gap {:.3}% (tol 0.5%), bound respected: {bounded}",
            worst * 100.0
        ),
    ))
}

/// Outer tolerance for single-user runs. With unit-gain channels each outer
/// step gains little, so `1e-3` stops several percent short of the optimum.
pub fn single_user_options() -> SolverOptions {
    SolverOptions {
        eps_outer: 1e-7,
        max_outer_iters: 2_000_000,
        record_trajectory: false,
        ..SolverOptions::default()
    }
}

/// Converged single-user rate at (L, N) = (4, 8) against the closed-form bound.
pub fn single_user_optimality(seeds: usize, seed: u64) -> Result<Check> {
    let config = unit_gain_config(4, 8, 1, 20.0);
    let opts = single_user_options();
    let gaps = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let channels = generate_channels(&config, &mut rng)?;
            let bound = oracle::single_user_bound(&channels, &config)?;
            let init = default_init(&channels, &config)?;
            let report = solve_fp_psla(&channels, &config, &opts, &init)?;
            let converged = report.termination == bdris_core::Termination::Converged;
            Ok(((bound - report.final_wsr) / bound, converged))
        })
        .collect::<Result<Vec<(f64, bool)>>>()?;
    let worst = max_f64(gaps.iter().map(|g| g.0));
    let converged = gaps.iter().filter(|g| g.1).count();
    Ok(Check::new(
        "single-user-optimality",
        worst <= 1e-2 && converged == seeds,
        format!(
            "K=1 L=4 N=8, {seeds} seeds, {converged} converged (eps_outer 1e-7), worst gap {:.3}% (tol 1%)",
            worst * 100.0
        ),
    ))
}

/// The linearization used by the Θ update matches the shifted objective to
/// first order along manifold tangents and equals it at the expansion point.
pub fn linearization_check(instances: usize, seed: u64) -> Result<Check> {
    let n = 3;
    let results = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let (config, channels, w, theta) = random_instance(3, n, 2, &mut rng)?;
            let f = model::effective_channels(&channels, &theta)?;
            let aux = fp::update_auxiliary(&f, &w, &config)?;
            let mats = fp::build_surrogate_matrices(&channels, &w, &aux, &config)?;
            let rho = projections::spectral_shift(&mats.y)?;
            let shifted = CMat::identity(n, n) * c(rho, 0.0) - &mats.y;
            let const_term = rho * re_trace(&mats.x);
            let convex = |t: &CMat| 2.0 * re_trace(&(t * &mats.m)) + quad_trace(t, &mats.x, t, &shifted) - const_term;
            let linear = |t: &CMat| {
                2.0 * re_trace(&(t * &mats.m)) + 2.0 * quad_trace(&theta, &mats.x, t, &shifted)
                    - quad_trace(&theta, &mats.x, &theta, &shifted)
                    - const_term
            };
            let direction = oracle::manifold_tangent(&theta, &oracle::random_hermitian(n, &mut rng));
            let fd = oracle::finite_difference_check(convex, linear, &theta, &direction, 1e-5);
            let scale = convex(&theta).abs().max(1.0);
            let equality = (convex(&theta) - linear(&theta)).abs() / scale;
            let on_manifold = (convex(&theta) - fp::theta_objective(&mats, &theta)).abs() / scale;
            Ok((fd, equality.max(on_manifold)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let worst_fd = max_f64(results.iter().map(|r| r.0));
    let worst_eq = max_f64(results.iter().map(|r| r.1));
    Ok(Check::new(
        "linearization",
        worst_fd <= 1e-4 && worst_eq <= 1e-12,
        format!("N=3, {instances} instances, slope error {worst_fd:.3e} (tol 1e-4), value error {worst_eq:.3e} (tol 1e-12)"),
    ))
}

/// Compact suite used by `bdris verify`; `scale` multiplies the instance counts.
pub fn run_suite(seed: u64, scale: usize) -> Result<Vec<Check>> {
    let s = scale.max(1);
    Ok(vec![
        fp_equivalence(100 * s, seed)?,
        surrogate_bound(100 * s, seed)?,
        projection_optimality(20 * s, 2_000, seed)?,
        inner_loop_dominance(5 * s, 20_000, seed)?,
        linearization_check(20 * s, seed)?,
        single_user_achievability(2, 100_000 * s, seed)?,
        single_user_optimality(3 * s, seed)?,
    ])
}
