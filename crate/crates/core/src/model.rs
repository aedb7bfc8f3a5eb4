//! System configuration, channel realizations and beamforming state.
//!
//! Channels follow a Rayleigh small-scale model scaled by the distance-based
//! path loss `P(d) = L0 · d^(−exponent)`. The BS–user direct link is assumed
//! blocked, so every user is reached only through the surface:
//! `f_kᴴ = h_kᴴ Θ E`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};

/// 2-D coordinates in meters.
pub type Point = [f64; 2];

/// Full description of one simulated scenario.
///
/// The on-disk form is a flat JSON object keyed by the field names below
/// (dimensions and power use their conventional symbols `L`, `N`, `K`, `Pt`).
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas.
    #[serde(rename = "L")]
    pub bs_antennas: usize,
    /// BD-RIS elements.
    #[serde(rename = "N")]
    pub ris_elements: usize,
    /// Single-antenna users.
    #[serde(rename = "K")]
    pub users: usize,
    /// Transmit power budget, linear units.
    #[serde(rename = "Pt")]
    pub pt: f64,
    /// Per-user noise power σ_k², linear units.
    pub noise_powers: Vec<f64>,
    /// Per-user rate weights δ_k.
    pub weights: Vec<f64>,
    pub bs_position: Point,
    pub ris_position: Point,
    pub user_area_center: Point,
    pub user_area_diameter: f64,
    /// Reference path loss at 1 m, in dB.
    pub pathloss_ref_db: f64,
    pub pathloss_exp_bs_ris: f64,
    pub pathloss_exp_ris_user: f64,
    pub eps_outer: f64,
    pub eps_inner: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        default_config()
    }
}

/// The reference downlink scenario: BS at (0, 0), surface at (150, 50), 32
/// users dropped in a 20 m disk centered at (150, 0), 32 BS antennas, 16
/// surface elements, transmit SNR 20 dB.
pub fn default_config() -> SystemConfig {
    let users = 32;
    let pt = 1.0;
    SystemConfig {
        bs_antennas: 32,
        ris_elements: 16,
        users,
        pt,
        noise_powers: vec![noise_for_snr_db(pt, 20.0); users],
        weights: vec![1.0; users],
        bs_position: [0.0, 0.0],
        ris_position: [150.0, 50.0],
        user_area_center: [150.0, 0.0],
        user_area_diameter: 20.0,
        pathloss_ref_db: -30.0,
        pathloss_exp_bs_ris: 2.0,
        pathloss_exp_ris_user: 2.2,
        eps_outer: 1e-3,
        eps_inner: 1e-4,
        max_outer_iters: 200,
        max_inner_iters: 100,
        rng_seed: 0,
    }
}

/// Noise power giving transmit SNR `Pt / σ²` of `snr_db`.
pub fn noise_for_snr_db(pt: f64, snr_db: f64) -> f64 {
    pt / 10f64.powf(snr_db / 10.0)
}

/// Reads and validates a JSON config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    let config: SystemConfig =
        serde_json::from_str(&text).map_err(|source| Error::ConfigParse {
            path: path.to_path_buf(),
            source,
        })?;
    config.validate()?;
    Ok(config)
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bs_antennas == 0 {
            return Err(invalid("L", "must be at least 1"));
        }
        if self.ris_elements == 0 {
            return Err(invalid("N", "must be at least 1"));
        }
        if self.users == 0 {
            return Err(invalid("K", "must be at least 1"));
        }
        if !(self.pt > 0.0 && self.pt.is_finite()) {
            return Err(invalid("Pt", format!("must be finite and > 0, got {}", self.pt)));
        }
        if self.noise_powers.len() != self.users {
            return Err(invalid(
                "noise_powers",
                format!("has {} entries but K = {}", self.noise_powers.len(), self.users),
            ));
        }
        if let Some(bad) = self.noise_powers.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid("noise_powers", format!("entries must be > 0, got {bad}")));
        }
        if self.weights.len() != self.users {
            return Err(invalid(
                "weights",
                format!("has {} entries but K = {}", self.weights.len(), self.users),
            ));
        }
        if let Some(bad) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(invalid("weights", format!("entries must be > 0, got {bad}")));
        }
        if !(self.user_area_diameter >= 0.0 && self.user_area_diameter.is_finite()) {
            return Err(invalid("user_area_diameter", "must be finite and ≥ 0"));
        }
        let finite = [
            ("bs_position", self.bs_position[0].is_finite() && self.bs_position[1].is_finite()),
            ("ris_position", self.ris_position[0].is_finite() && self.ris_position[1].is_finite()),
            (
                "user_area_center",
                self.user_area_center[0].is_finite() && self.user_area_center[1].is_finite(),
            ),
            ("pathloss_ref_db", self.pathloss_ref_db.is_finite()),
            ("pathloss_exp_bs_ris", self.pathloss_exp_bs_ris.is_finite()),
            ("pathloss_exp_ris_user", self.pathloss_exp_ris_user.is_finite()),
        ];
        if let Some((field, _)) = finite.iter().find(|(_, ok)| !ok) {
            return Err(invalid(field, "must be finite"));
        }
        if !(self.eps_outer > 0.0) {
            return Err(invalid("eps_outer", "must be > 0"));
        }
        if !(self.eps_inner > 0.0) {
            return Err(invalid("eps_inner", "must be > 0"));
        }
        if self.max_outer_iters == 0 {
            return Err(invalid("max_outer_iters", "must be at least 1"));
        }
        if self.max_inner_iters == 0 {
            return Err(invalid("max_inner_iters", "must be at least 1"));
        }
        Ok(())
    }

    /// Sets every user's noise power so that `Pt / σ²` equals `snr_db`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let noise = noise_for_snr_db(self.pt, snr_db);
        self.noise_powers = vec![noise; self.users];
        self
    }

    /// Resizes the user population, keeping the first user's noise power and
    /// weight for every user.
    pub fn with_users(mut self, users: usize) -> Self {
        let noise = self.noise_powers.first().copied().unwrap_or(1.0);
        let weight = self.weights.first().copied().unwrap_or(1.0);
        self.users = users;
        self.noise_powers = vec![noise; users];
        self.weights = vec![weight; users];
        self
    }

    pub fn with_dims(self, bs_antennas: usize, ris_elements: usize, users: usize) -> Self {
        let mut config = self.with_users(users);
        config.bs_antennas = bs_antennas;
        config.ris_elements = ris_elements;
        config
    }

    /// Removes large-scale fading: 0 dB reference loss and zero exponents,
    /// leaving unit-variance Rayleigh channels.
    pub fn without_pathloss(mut self) -> Self {
        self.pathloss_ref_db = 0.0;
        self.pathloss_exp_bs_ris = 0.0;
        self.pathloss_exp_ris_user = 0.0;
        self
    }
}

/// Linear path loss `10^(L0/10) · d^(−exponent)`.
pub fn pathloss_linear(ref_db: f64, exponent: f64, distance: f64) -> f64 {
    10f64.powf(ref_db / 10.0) * distance.powf(-exponent)
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// RIS→user channels `H` (N×K, column k is `h_k`) and the BS→RIS channel `E` (N×L).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: CMat,
    pub e: CMat,
}

impl ChannelSet {
    pub fn new(h: CMat, e: CMat) -> Result<Self> {
        if h.nrows() != e.nrows() {
            return Err(Error::dims("ChannelSet (H rows vs E rows)", (e.nrows(), h.ncols()), h.shape()));
        }
        if !linalg::is_finite(&h) {
            return Err(Error::NonFinite { context: "H" });
        }
        if !linalg::is_finite(&e) {
            return Err(Error::NonFinite { context: "E" });
        }
        Ok(Self { h, e })
    }

    pub fn ris_elements(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn bs_antennas(&self) -> usize {
        self.e.ncols()
    }

    pub fn check_against(&self, config: &SystemConfig) -> Result<()> {
        let (n, k, l) = (config.ris_elements, config.users, config.bs_antennas);
        if self.h.shape() != (n, k) {
            return Err(Error::dims("ChannelSet::H", (n, k), self.h.shape()));
        }
        if self.e.shape() != (n, l) {
            return Err(Error::dims("ChannelSet::E", (n, l), self.e.shape()));
        }
        Ok(())
    }
}

/// Active precoder `W` (L×K) and passive scattering matrix `Θ` (N×N).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingState {
    pub w: CMat,
    pub theta: CMat,
}

impl BeamformingState {
    /// Checks `‖W‖_F² = Pt` (relative 1e-10) and `Θ ∈ M` (1e-8).
    pub fn check_feasible(&self, pt: f64) -> Result<()> {
        check_power(&self.w, pt)?;
        check_symmetric_unitary(&self.theta)
    }
}

pub(crate) fn check_power(w: &CMat, pt: f64) -> Result<()> {
    let power = linalg::frobenius_sq(w);
    if !((power - pt).abs() <= 1e-10 * pt) {
        return Err(Error::Infeasible {
            what: "W",
            detail: format!("‖W‖_F² = {power:e}, expected Pt = {pt:e}"),
        });
    }
    Ok(())
}

pub(crate) fn check_symmetric_unitary(theta: &CMat) -> Result<()> {
    if !theta.is_square() {
        return Err(Error::Infeasible {
            what: "Θ",
            detail: format!("not square: {}×{}", theta.nrows(), theta.ncols()),
        });
    }
    let sym = linalg::symmetry_error(theta);
    let uni = linalg::unitarity_error(theta);
    if !(sym <= linalg::MANIFOLD_TOL && uni <= linalg::MANIFOLD_TOL) {
        return Err(Error::Infeasible {
            what: "Θ",
            detail: format!("‖Θ−Θᵀ‖_F = {sym:e}, ‖ΘΘᴴ−I‖_F = {uni:e}"),
        });
    }
    Ok(())
}

/// FP auxiliary variables: `alpha` (per-user SINR at the optimum) and `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryVars {
    pub alpha: Vec<f64>,
    pub beta: Vec<C64>,
}

/// One CN(0, 1) draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries, filled column-major.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Uniform point in the disk of the given center and diameter.
pub fn sample_in_disk<R: Rng + ?Sized>(rng: &mut R, center: Point, diameter: f64) -> Point {
    let radius = 0.5 * diameter * rng.random::<f64>().sqrt();
    let angle = 2.0 * PI * rng.random::<f64>();
    [center[0] + radius * angle.cos(), center[1] + radius * angle.sin()]
}

/// Draws user positions, then `E`, then `H` column by column.
pub fn generate_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    config.validate()?;
    let (l, n, k) = (config.bs_antennas, config.ris_elements, config.users);

    let positions: Vec<Point> = (0..k)
        .map(|_| sample_in_disk(rng, config.user_area_center, config.user_area_diameter))
        .collect();

    let d_bs_ris = distance(config.bs_position, config.ris_position);
    let e_gain = pathloss_linear(config.pathloss_ref_db, config.pathloss_exp_bs_ris, d_bs_ris).sqrt();
    let e = complex_gaussian_matrix(rng, n, l) * c(e_gain, 0.0);

    let mut h = CMat::zeros(n, k);
    for (col, pos) in positions.iter().enumerate() {
        let d = distance(config.ris_position, *pos);
        let gain = pathloss_linear(config.pathloss_ref_db, config.pathloss_exp_ris_user, d).sqrt();
        for row in 0..n {
            h[(row, col)] = complex_gaussian(rng) * gain;
        }
    }
    ChannelSet::new(h, e)
}

/// Effective BS→user channels `F` (L×K) with `Fᴴ = Hᴴ Θ E`.
pub fn effective_channels(channels: &ChannelSet, theta: &CMat) -> Result<CMat> {
    let n = channels.ris_elements();
    if theta.shape() != (n, n) {
        return Err(Error::dims("effective_channels (Θ)", (n, n), theta.shape()));
    }
    Ok((channels.h.adjoint() * theta * &channels.e).adjoint())
}
