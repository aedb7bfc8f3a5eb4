//! Projected successive linear approximation (PSLA) inner loops and the
//! outer alternating-optimization driver (FP-PSLA).
//!
//! Each inner loop maximizes a concave quadratic over a non-convex set. The
//! quadratic term is shifted by `ρ = λ_max` so that it becomes convex on the
//! feasible set (where the shift only adds a constant), linearized at the
//! current iterate, and the linear maximizer is obtained by projection. Each
//! step therefore never decreases the objective.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fp::{self, SurrogateMatrices};
use crate::linalg::{self, c, CMat, C64};
use crate::model::{self, BeamformingState, ChannelSet, SystemConfig};
use crate::projections::{project_power_sphere, project_symmetric_unitary, spectral_shift};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Outer tolerance on the absolute WSR change between iterations.
    pub eps_outer: f64,
    /// Inner tolerance on the relative objective change.
    pub eps_inner: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    /// Keep the whole WSR trajectory; otherwise only the last value.
    pub record_trajectory: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_outer: 1e-3,
            eps_inner: 1e-4,
            max_outer_iters: 200,
            max_inner_iters: 100,
            record_trajectory: true,
        }
    }
}

impl SolverOptions {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            eps_outer: config.eps_outer,
            eps_inner: config.eps_inner,
            max_outer_iters: config.max_outer_iters,
            max_inner_iters: config.max_inner_iters,
            record_trajectory: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.eps_outer > 0.0) {
            return bad("eps_outer", "must be > 0");
        }
        if !(self.eps_inner > 0.0) {
            return bad("eps_inner", "must be > 0");
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters", "must be at least 1");
        }
        if self.max_inner_iters == 0 {
            return bad("max_inner_iters", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    /// WSR of the starting point.
    pub initial_wsr: f64,
    /// WSR after each outer iteration.
    pub wsr_trajectory: Vec<f64>,
    /// Seconds since the start of the solve at the end of each outer iteration.
    pub elapsed_trajectory: Vec<f64>,
    pub inner_iters_theta: Vec<usize>,
    pub inner_iters_w: Vec<usize>,
    pub outer_iters: usize,
    pub wall_time_total: f64,
    pub time_aux: f64,
    pub time_w: f64,
    pub time_theta: f64,
    pub termination: Termination,
    pub final_state: BeamformingState,
    pub final_wsr: f64,
}

/// Relative change test shared by both inner loops.
fn inner_converged(previous: f64, current: f64, eps: f64) -> bool {
    let scale = previous.abs().max(current.abs());
    scale == 0.0 || (current - previous).abs() <= eps * scale
}

/// PSLA for `max_{Θ ∈ M} 2Re{tr(ΘM)} − tr(ΘXΘᴴY)` starting from `theta0`.
///
/// Returns the final iterate and the number of projection steps taken.
pub fn psla_theta(mats: &SurrogateMatrices, theta0: &CMat, opts: &SolverOptions) -> Result<(CMat, usize)> {
    model::check_symmetric_unitary(theta0)?;
    let n = mats.m.nrows();
    if theta0.nrows() != n {
        return Err(Error::dims("psla_theta (Θ0)", (n, n), theta0.shape()));
    }
    if mats.is_theta_constant() {
        return Ok((theta0.clone(), 0));
    }

    let rho = spectral_shift(&mats.y)?;
    let shifted = CMat::identity(n, n) * c(rho, 0.0) - &mats.y;
    let m_adj = mats.m.adjoint();

    let mut theta = theta0.clone();
    let mut objective = fp::theta_objective(mats, &theta);
    let mut iters = 0;
    while iters < opts.max_inner_iters {
        let target = &shifted * &theta * &mats.x + &m_adj;
        let next = project_symmetric_unitary(&target)?;
        let next_objective = fp::theta_objective(mats, &next);
        iters += 1;
        debug_assert!(
            linalg::is_symmetric_unitary(&next, linalg::MANIFOLD_TOL),
            "Θ left the manifold"
        );
        let done = inner_converged(objective, next_objective, opts.eps_inner);
        theta = next;
        objective = next_objective;
        if done {
            break;
        }
    }
    Ok((theta, iters))
}

/// PSLA for `max_{‖W‖_F² = Pt} 2Re{tr(Σ₁FᴴW)} − tr(WWᴴFΣ₂Fᴴ)` starting from `w0`.
pub fn psla_w(
    f: &CMat,
    aux: &model::AuxiliaryVars,
    w0: &CMat,
    config: &SystemConfig,
    opts: &SolverOptions,
) -> Result<(CMat, usize)> {
    model::check_power(w0, config.pt)?;
    if f.shape() != w0.shape() {
        return Err(Error::dims("psla_w (F vs W0)", w0.shape(), f.shape()));
    }
    let (sigma1, sigma2) = fp::sigma_weights(aux, &config.weights);
    psla_w_with(f, &sigma1, &sigma2, w0, config.pt, opts)
}

/// [`psla_w`] on explicit `Σ₁`, `Σ₂` diagonals.
pub fn psla_w_with(
    f: &CMat,
    sigma1: &[C64],
    sigma2: &[f64],
    w0: &CMat,
    pt: f64,
    opts: &SolverOptions,
) -> Result<(CMat, usize)> {
    let degenerate = sigma1.iter().all(|s| s.norm() == 0.0) && sigma2.iter().all(|s| *s == 0.0);
    if degenerate {
        return Ok((w0.clone(), 0));
    }
    let l = f.nrows();
    let f_scaled = f * linalg::real_diag(&sigma2.iter().map(|s| s.sqrt()).collect::<Vec<_>>());
    let quad = f_scaled.clone() * f_scaled.adjoint();
    let quad = (&quad + quad.adjoint()) * c(0.5, 0.0);
    let rho = spectral_shift(&quad)?;
    let shifted = CMat::identity(l, l) * c(rho, 0.0) - &quad;
    // FΣ₁ᴴ: column k is δ_k√(1+α_k)β_k f_k, the weighted MRT direction
    let linear = f * linalg::complex_diag(&sigma1.iter().map(|s| s.conj()).collect::<Vec<_>>());

    let mut w = w0.clone();
    let mut objective = fp::w_objective(f, sigma1, sigma2, &w);
    let mut iters = 0;
    while iters < opts.max_inner_iters {
        let target = &shifted * &w + &linear;
        let next = project_power_sphere(&target, pt)?;
        let next_objective = fp::w_objective(f, sigma1, sigma2, &next);
        iters += 1;
        let done = inner_converged(objective, next_objective, opts.eps_inner);
        w = next;
        objective = next_objective;
        if done {
            break;
        }
    }
    Ok((w, iters))
}

/// Initial point: `Θ⁰ = Π_M(H·I_{K×L}·Eᴴ)`, then the MRT direction of the
/// resulting effective channel scaled onto the power sphere.
pub fn default_init(channels: &ChannelSet, config: &SystemConfig) -> Result<BeamformingState> {
    channels.check_against(config)?;
    let (l, k) = (config.bs_antennas, config.users);
    let rect_identity = CMat::from_fn(k, l, |i, j| if i == j { c(1.0, 0.0) } else { C64::default() });
    let theta = project_symmetric_unitary(&(&channels.h * rect_identity * channels.e.adjoint()))?;
    let f = model::effective_channels(channels, &theta)?;
    let w = project_power_sphere(&mrt_initializer(&f, config.pt)?, config.pt)?;
    Ok(BeamformingState { w, theta })
}

/// `√(0.4·Pt)·F/‖F‖_F`; its power is `0.4·Pt`, so [`default_init`] rescales it.
pub fn mrt_initializer(f: &CMat, pt: f64) -> Result<CMat> {
    let norm = linalg::frobenius(f);
    if norm == 0.0 {
        return Err(Error::ZeroProjection);
    }
    Ok(f * c((0.4 * pt).sqrt() / norm, 0.0))
}

/// Alternates `(α, β)` → `W` → `Θ` until the WSR changes by at most `eps_outer`.
pub fn solve_fp_psla(
    channels: &ChannelSet,
    config: &SystemConfig,
    opts: &SolverOptions,
    init: &BeamformingState,
) -> Result<SolverReport> {
    opts.validate()?;
    config.validate()?;
    channels.check_against(config)?;
    init.check_feasible(config.pt)?;

    let start = Instant::now();
    let (mut time_aux, mut time_w, mut time_theta) = (0.0, 0.0, 0.0);
    let mut state = init.clone();
    let mut f = model::effective_channels(channels, &state.theta)?;
    let initial_wsr = fp::weighted_sum_rate(&f, &state.w, config)?;

    let mut wsr_trajectory = Vec::new();
    let mut elapsed_trajectory = Vec::new();
    let mut inner_iters_theta = Vec::new();
    let mut inner_iters_w = Vec::new();
    let mut previous = initial_wsr;
    let mut termination = Termination::MaxIters;
    let mut outer_iters = 0;

    while outer_iters < opts.max_outer_iters {
        outer_iters += 1;

        let t = Instant::now();
        let aux = fp::update_auxiliary(&f, &state.w, config)?;
        time_aux += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (w, iters_w) = psla_w(&f, &aux, &state.w, config, opts)?;
        state.w = w;
        time_w += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mats = fp::build_surrogate_matrices(channels, &state.w, &aux, config)?;
        let (theta, iters_theta) = psla_theta(&mats, &state.theta, opts)?;
        state.theta = theta;
        time_theta += t.elapsed().as_secs_f64();

        #[cfg(debug_assertions)]
        state
            .check_feasible(config.pt)
            .expect("feasibility lost during an outer iteration");

        f = model::effective_channels(channels, &state.theta)?;
        let wsr = fp::weighted_sum_rate(&f, &state.w, config)?;
        if !opts.record_trajectory {
            wsr_trajectory.clear();
            elapsed_trajectory.clear();
            inner_iters_theta.clear();
            inner_iters_w.clear();
        }
        wsr_trajectory.push(wsr);
        elapsed_trajectory.push(start.elapsed().as_secs_f64());
        inner_iters_theta.push(iters_theta);
        inner_iters_w.push(iters_w);

        let converged = (wsr - previous).abs() <= opts.eps_outer;
        previous = wsr;
        if converged {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolverReport {
        initial_wsr,
        wsr_trajectory,
        elapsed_trajectory,
        inner_iters_theta,
        inner_iters_w,
        outer_iters,
        wall_time_total: start.elapsed().as_secs_f64(),
        time_aux,
        time_w,
        time_theta,
        termination,
        final_wsr: previous,
        final_state: state,
    })
}
