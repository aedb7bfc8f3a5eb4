//! Rates, fractional-programming auxiliary updates and the surrogate pieces
//! shared by both PSLA subproblems.
//!
//! Rates are reported in bits/s/Hz. The fractional-programming surrogate is
//! built on the natural logarithm (that is what makes the closed-form `α`
//! update a maximizer) and [`surrogate_value`] rescales it by `1/ln 2` so it
//! is directly comparable with [`weighted_sum_rate`].
//!
//! Conventions: `F` is L×K with column `f_k`, `W` is L×K with column `w_k`,
//! and `G = FᴴW` collects the cross gains `G[k, j] = f_kᴴ w_j`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::model::{AuxiliaryVars, ChannelSet, SystemConfig};

fn cross_gains(f: &CMat, w: &CMat) -> Result<CMat> {
    if f.shape() != w.shape() {
        return Err(Error::dims("F vs W", f.shape(), w.shape()));
    }
    Ok(f.adjoint() * w)
}

/// `(signal, interference)` for user `k`: `|f_kᴴw_k|²` and `Σ_{j≠k}|f_kᴴw_j|²`.
fn signal_interference(gains: &CMat, k: usize) -> (f64, f64) {
    let row = gains.row(k);
    let signal = row[k].norm_sqr();
    let total: f64 = row.iter().map(|g| g.norm_sqr()).sum();
    (signal, (total - signal).max(0.0))
}

fn sinr_from_gains(gains: &CMat, k: usize, noise: f64) -> f64 {
    let (signal, interference) = signal_interference(gains, k);
    signal / (interference + noise)
}

/// Achievable rate of user `k` in bits: `log₂(1 + SINR_k)`.
pub fn user_rate(f: &CMat, w: &CMat, k: usize, noise_k: f64) -> Result<f64> {
    let gains = cross_gains(f, w)?;
    if k >= gains.nrows() {
        return Err(Error::DimensionMismatch {
            context: "user_rate (user index)",
            expected: format!("k < {}", gains.nrows()),
            actual: k.to_string(),
        });
    }
    Ok(sinr_from_gains(&gains, k, noise_k).ln_1p() / LN_2)
}

/// `Σ_k δ_k log₂(1 + SINR_k)` with explicit weights and noise powers.
pub fn weighted_sum_rate_with(f: &CMat, w: &CMat, weights: &[f64], noise: &[f64]) -> Result<f64> {
    let gains = cross_gains(f, w)?;
    let k = gains.nrows();
    if weights.len() != k || noise.len() != k {
        return Err(Error::DimensionMismatch {
            context: "weighted_sum_rate (weights/noise length)",
            expected: k.to_string(),
            actual: format!("{}/{}", weights.len(), noise.len()),
        });
    }
    Ok((0..k)
        .map(|u| weights[u] * sinr_from_gains(&gains, u, noise[u]).ln_1p() / LN_2)
        .sum())
}

pub fn weighted_sum_rate(f: &CMat, w: &CMat, config: &SystemConfig) -> Result<f64> {
    weighted_sum_rate_with(f, w, &config.weights, &config.noise_powers)
}

/// Per-user SINR, the optimal `α`.
pub fn update_alpha(f: &CMat, w: &CMat, config: &SystemConfig) -> Result<Vec<f64>> {
    let gains = cross_gains(f, w)?;
    Ok((0..gains.nrows())
        .map(|k| sinr_from_gains(&gains, k, config.noise_powers[k]))
        .collect())
}

/// `β_k = √(1+α_k) f_kᴴw_k / (Σ_j |f_kᴴw_j|² + σ_k²)`.
pub fn update_beta(f: &CMat, w: &CMat, alpha: &[f64], config: &SystemConfig) -> Result<Vec<C64>> {
    let gains = cross_gains(f, w)?;
    Ok((0..gains.nrows())
        .map(|k| {
            let total: f64 = gains.row(k).iter().map(|g| g.norm_sqr()).sum();
            gains[(k, k)] * ((1.0 + alpha[k]).sqrt() / (total + config.noise_powers[k]))
        })
        .collect())
}

/// Optimal `(α, β)` for the given beamformers.
pub fn update_auxiliary(f: &CMat, w: &CMat, config: &SystemConfig) -> Result<AuxiliaryVars> {
    let alpha = update_alpha(f, w, config)?;
    let beta = update_beta(f, w, &alpha, config)?;
    Ok(AuxiliaryVars { alpha, beta })
}

/// `Σ_k δ_k h_k` in natural-log units, with
/// `h_k = 2√(1+α_k) Re{β_k* f_kᴴw_k} − α_k − |β_k|²(Σ_j|f_kᴴw_j|² + σ_k²) + ln(1+α_k)`.
pub fn fp_objective_nats(aux: &AuxiliaryVars, f: &CMat, w: &CMat, config: &SystemConfig) -> Result<f64> {
    let gains = cross_gains(f, w)?;
    Ok((0..gains.nrows())
        .map(|k| {
            let (a, b) = (aux.alpha[k], aux.beta[k]);
            let total: f64 = gains.row(k).iter().map(|g| g.norm_sqr()).sum();
            let h = 2.0 * (1.0 + a).sqrt() * (b.conj() * gains[(k, k)]).re - a
                - b.norm_sqr() * (total + config.noise_powers[k])
                + a.ln_1p();
            config.weights[k] * h
        })
        .sum())
}

/// The FP surrogate in bits; equals [`weighted_sum_rate`] at the optimal
/// `(α, β)` and lower-bounds it everywhere else.
pub fn surrogate_value(aux: &AuxiliaryVars, f: &CMat, w: &CMat, config: &SystemConfig) -> Result<f64> {
    Ok(fp_objective_nats(aux, f, w, config)? / LN_2)
}

/// Quadratic-form data of the `Θ` and `W` subproblems for fixed `(α, β)`.
///
/// `Σ₁` carries the conjugate `β_k*` so that the trace objective
/// `2Re{tr(ΘM)} − tr(ΘXΘᴴY)` is exactly the `Θ`-dependent part of `Σ_k δ_k h_k`.
#[derive(Debug, Clone)]
pub struct SurrogateMatrices {
    /// `E W Σ₁ Hᴴ` (N×N).
    pub m: CMat,
    /// `E W Wᴴ Eᴴ` (N×N, Hermitian PSD).
    pub x: CMat,
    /// `H Σ₂ Hᴴ` (N×N, Hermitian PSD).
    pub y: CMat,
    /// Diagonal of `Σ₁`: `δ_k √(1+α_k) β_k*`.
    pub sigma1: Vec<C64>,
    /// Diagonal of `Σ₂`: `δ_k |β_k|²`.
    pub sigma2: Vec<f64>,
}

impl SurrogateMatrices {
    pub fn sigma1_matrix(&self) -> CMat {
        linalg::complex_diag(&self.sigma1)
    }

    pub fn sigma2_matrix(&self) -> CMat {
        linalg::real_diag(&self.sigma2)
    }

    /// True when the `Θ` objective does not depend on `Θ`.
    pub fn is_theta_constant(&self) -> bool {
        let zero = |a: &CMat| a.iter().all(|z| *z == C64::default());
        zero(&self.m) && (zero(&self.x) || zero(&self.y))
    }
}

/// Diagonals `(Σ₁, Σ₂)` from the auxiliary variables and user weights.
pub fn sigma_weights(aux: &AuxiliaryVars, weights: &[f64]) -> (Vec<C64>, Vec<f64>) {
    let sigma1 = aux
        .alpha
        .iter()
        .zip(&aux.beta)
        .zip(weights)
        .map(|((a, b), d)| b.conj() * (d * (1.0 + a).sqrt()))
        .collect();
    let sigma2 = aux.beta.iter().zip(weights).map(|(b, d)| d * b.norm_sqr()).collect();
    (sigma1, sigma2)
}

fn hermitize(a: CMat) -> CMat {
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn build_surrogate_matrices(
    channels: &ChannelSet,
    w: &CMat,
    aux: &AuxiliaryVars,
    config: &SystemConfig,
) -> Result<SurrogateMatrices> {
    channels.check_against(config)?;
    let (l, k) = (config.bs_antennas, config.users);
    if w.shape() != (l, k) {
        return Err(Error::dims("build_surrogate_matrices (W)", (l, k), w.shape()));
    }
    if aux.alpha.len() != k || aux.beta.len() != k {
        return Err(Error::DimensionMismatch {
            context: "build_surrogate_matrices (α/β length)",
            expected: k.to_string(),
            actual: format!("{}/{}", aux.alpha.len(), aux.beta.len()),
        });
    }
    let (sigma1, sigma2) = sigma_weights(aux, &config.weights);
    let ew = &channels.e * w;
    let m = &ew * linalg::complex_diag(&sigma1) * channels.h.adjoint();
    let x = hermitize(&ew * ew.adjoint());
    let h_scaled = &channels.h * linalg::real_diag(&sigma2.iter().map(|s| s.sqrt()).collect::<Vec<_>>());
    let y = hermitize(&h_scaled * h_scaled.adjoint());
    Ok(SurrogateMatrices { m, x, y, sigma1, sigma2 })
}

/// `2Re{tr(ΘM)} − tr(ΘXΘᴴY)`.
pub fn theta_objective(mats: &SurrogateMatrices, theta: &CMat) -> f64 {
    let linear: C64 = theta.component_mul(&mats.m.transpose()).sum();
    let quad = theta * &mats.x * theta.adjoint();
    let quad_trace: C64 = quad.component_mul(&mats.y.transpose()).sum();
    2.0 * linear.re - quad_trace.re
}

/// `2Re{tr(Σ₁FᴴW)} − tr(WWᴴFΣ₂Fᴴ)`.
pub fn w_objective(f: &CMat, sigma1: &[C64], sigma2: &[f64], w: &CMat) -> f64 {
    // With G = FᴴW: tr(Σ₁G) + the quadratic term Σ_k σ₂_k ‖row_k(G)‖².
    let gains = f.adjoint() * w;
    let mut value = 0.0;
    for k in 0..gains.nrows() {
        value += 2.0 * (sigma1[k] * gains[(k, k)]).re;
        value -= sigma2[k] * gains.row(k).iter().map(|g| g.norm_sqr()).sum::<f64>();
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{complex_gaussian_matrix, default_config, effective_channels, generate_channels};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(z: C64) -> CMat {
        CMat::from_element(1, 1, z)
    }

    fn random_instance(seed: u64, l: usize, n: usize, k: usize) -> (SystemConfig, ChannelSet, CMat, CMat) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut config = default_config().with_dims(l, n, k).without_pathloss().with_snr_db(10.0);
        config.weights = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let ch = generate_channels(&config, &mut rng).unwrap();
        let theta = complex_gaussian_matrix(&mut rng, n, n);
        let w = complex_gaussian_matrix(&mut rng, l, k);
        (config, ch, theta, w)
    }

    #[test]
    fn unit_sinr_is_one_bit() {
        let f = scalar(c(2.0, 0.0));
        let w = scalar(c(0.5, 0.0));
        assert!((user_rate(&f, &w, 0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_beamformer_zero_rate() {
        let f = CMat::from_element(2, 2, c(1.0, 1.0));
        let w = CMat::from_fn(2, 2, |i, j| if j == 0 { C64::default() } else { c(i as f64, 1.0) });
        assert_eq!(user_rate(&f, &w, 0, 0.3).unwrap(), 0.0);
        let mut config = default_config().with_dims(2, 1, 2);
        config.noise_powers = vec![0.3, 0.3];
        assert_eq!(update_alpha(&f, &w, &config).unwrap()[0], 0.0);
    }

    #[test]
    fn rate_matches_term_by_term_formula() {
        let (config, ch, theta, w) = random_instance(2, 4, 5, 3);
        let f = effective_channels(&ch, &theta).unwrap();
        for k in 0..3 {
            let fk = f.column(k);
            let term = |j: usize| {
                let mut acc = C64::default();
                for l in 0..4 {
                    acc += fk[l].conj() * w[(l, j)];
                }
                acc.norm_sqr()
            };
            let interference: f64 = (0..3).filter(|j| *j != k).map(term).sum();
            let expected = (1.0 + term(k) / (interference + config.noise_powers[k])).log2();
            let got = user_rate(&f, &w, k, config.noise_powers[k]).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn wsr_zero_weights_and_single_user() {
        let (config, ch, theta, w) = random_instance(3, 3, 4, 2);
        let f = effective_channels(&ch, &theta).unwrap();
        assert_eq!(weighted_sum_rate_with(&f, &w, &[0.0, 0.0], &config.noise_powers).unwrap(), 0.0);

        let f1 = f.columns(0, 1).into_owned();
        let w1 = w.columns(0, 1).into_owned();
        let wsr = weighted_sum_rate_with(&f1, &w1, &[1.0], &[config.noise_powers[0]]).unwrap();
        assert_eq!(wsr, user_rate(&f1, &w1, 0, config.noise_powers[0]).unwrap());
    }

    #[test]
    fn wsr_invariant_under_user_permutation() {
        let (config, ch, theta, w) = random_instance(4, 4, 4, 3);
        let f = effective_channels(&ch, &theta).unwrap();
        let base = weighted_sum_rate(&f, &w, &config).unwrap();
        let perm = [2usize, 0, 1];
        let fp = CMat::from_fn(4, 3, |i, j| f[(i, perm[j])]);
        let wp = CMat::from_fn(4, 3, |i, j| w[(i, perm[j])]);
        let weights: Vec<f64> = perm.iter().map(|p| config.weights[*p]).collect();
        let noise: Vec<f64> = perm.iter().map(|p| config.noise_powers[*p]).collect();
        let permuted = weighted_sum_rate_with(&fp, &wp, &weights, &noise).unwrap();
        assert!((base - permuted).abs() < 1e-12 * base.max(1.0));
    }

    #[test]
    fn alpha_single_user_and_consistency() {
        let mut config = default_config().with_dims(1, 1, 1);
        config.noise_powers = vec![0.5];
        let f = scalar(c(1.0, 0.0));
        let w = scalar(c(1.0, 0.0));
        assert!((update_alpha(&f, &w, &config).unwrap()[0] - 2.0).abs() < 1e-15);

        let (config, ch, theta, w) = random_instance(5, 4, 6, 3);
        let f = effective_channels(&ch, &theta).unwrap();
        let alpha = update_alpha(&f, &w, &config).unwrap();
        for k in 0..3 {
            let rate = user_rate(&f, &w, k, config.noise_powers[k]).unwrap();
            assert!((alpha[k].ln_1p() / LN_2 - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_zero_and_scalar_closed_form() {
        let config = default_config().with_dims(2, 1, 2);
        let f = CMat::from_element(2, 2, c(0.3, -0.2));
        let w = CMat::zeros(2, 2);
        let alpha = update_alpha(&f, &w, &config).unwrap();
        assert!(update_beta(&f, &w, &alpha, &config).unwrap().iter().all(|b| b.norm() == 0.0));

        let (g, p, s2) = (0.7_f64, 2.0_f64, 0.3_f64);
        let mut config = default_config().with_dims(1, 1, 1);
        config.noise_powers = vec![s2];
        let f = scalar(c(g.sqrt(), 0.0));
        let w = scalar(c(p.sqrt(), 0.0));
        let alpha = update_alpha(&f, &w, &config).unwrap();
        let beta = update_beta(&f, &w, &alpha, &config).unwrap()[0];
        let expected = (1.0 + g * p / s2).sqrt() * (g * p).sqrt() / (g * p + s2);
        assert!((beta.re - expected).abs() < 1e-14 && beta.im.abs() < 1e-15);
    }

    #[test]
    fn surrogate_zero_at_zero_aux() {
        let (config, ch, theta, w) = random_instance(6, 3, 3, 2);
        let f = effective_channels(&ch, &theta).unwrap();
        let aux = AuxiliaryVars { alpha: vec![0.0; 2], beta: vec![C64::default(); 2] };
        assert_eq!(surrogate_value(&aux, &f, &w, &config).unwrap(), 0.0);
    }

    #[test]
    fn surrogate_tight_at_optimal_aux_and_below_elsewhere() {
        for seed in 0..50 {
            let (config, ch, theta, w) = random_instance(100 + seed, 4, 4, 3);
            let f = effective_channels(&ch, &theta).unwrap();
            let wsr = weighted_sum_rate(&f, &w, &config).unwrap();
            let aux = update_auxiliary(&f, &w, &config).unwrap();
            let value = surrogate_value(&aux, &f, &w, &config).unwrap();
            assert!((value - wsr).abs() <= 1e-10 * wsr.max(1e-300), "seed {seed}: {value} vs {wsr}");

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let perturbed = AuxiliaryVars {
                    alpha: aux.alpha.iter().map(|a| (a + rng.random_range(-1.0..1.0) * a).max(0.0)).collect(),
                    beta: aux
                        .beta
                        .iter()
                        .map(|b| b + c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * b.norm())
                        .collect(),
                };
                let v = surrogate_value(&perturbed, &f, &w, &config).unwrap();
                assert!(v <= wsr + 1e-12 * wsr, "seed {seed}: {v} > {wsr}");
            }
        }
    }

    #[test]
    fn surrogate_matrices_degenerate_cases() {
        let (config, ch, theta, w) = random_instance(7, 3, 4, 2);
        let f = effective_channels(&ch, &theta).unwrap();
        let aux = update_auxiliary(&f, &w, &config).unwrap();
        let mats = build_surrogate_matrices(&ch, &CMat::zeros(3, 2), &aux, &config).unwrap();
        assert!(linalg::frobenius(&mats.m) == 0.0 && linalg::frobenius(&mats.x) == 0.0);

        let zero_beta = AuxiliaryVars { alpha: aux.alpha.clone(), beta: vec![C64::default(); 2] };
        let mats = build_surrogate_matrices(&ch, &w, &zero_beta, &config).unwrap();
        assert!(mats.sigma1.iter().all(|s| s.norm() == 0.0) && mats.sigma2.iter().all(|s| *s == 0.0));
        assert!(linalg::frobenius(&mats.m) == 0.0 && linalg::frobenius(&mats.y) == 0.0);
        assert!(mats.is_theta_constant());
    }

    #[test]
    fn trace_form_equals_per_user_form() {
        for seed in 0..100 {
            let (config, ch, theta_rand, w) = random_instance(1000 + seed, 3, 4, 3);
            let f0 = effective_channels(&ch, &theta_rand).unwrap();
            let aux = update_auxiliary(&f0, &w, &config).unwrap();
            let mats = build_surrogate_matrices(&ch, &w, &aux, &config).unwrap();
            // any square Θ works for the identity; use a fresh random one
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = complex_gaussian_matrix(&mut rng, 4, 4);
            let f = effective_channels(&ch, &theta).unwrap();
            let full = fp_objective_nats(&aux, &f, &w, &config).unwrap();
            let constant: f64 = (0..3)
                .map(|k| {
                    config.weights[k]
                        * (-aux.alpha[k] - aux.beta[k].norm_sqr() * config.noise_powers[k] + aux.alpha[k].ln_1p())
                })
                .sum();
            let trace = theta_objective(&mats, &theta);
            assert!((full - constant - trace).abs() <= 1e-9 * (1.0 + trace.abs()), "seed {seed}");

            let w_form = w_objective(&f, &mats.sigma1, &mats.sigma2, &w);
            assert!((full - constant - w_form).abs() <= 1e-9 * (1.0 + w_form.abs()));
        }
    }

    #[test]
    fn x_and_y_are_hermitian_psd() {
        let (config, ch, theta, w) = random_instance(8, 4, 5, 3);
        let f = effective_channels(&ch, &theta).unwrap();
        let aux = update_auxiliary(&f, &w, &config).unwrap();
        let mats = build_surrogate_matrices(&ch, &w, &aux, &config).unwrap();
        for a in [&mats.x, &mats.y] {
            assert!(linalg::hermitian_error(a) <= 1e-10 * linalg::frobenius(a));
            let eig = a.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|v| *v >= -1e-10 * linalg::frobenius(a)));
        }
        assert!(mats.sigma2.iter().all(|s| *s >= 0.0));
    }
}
