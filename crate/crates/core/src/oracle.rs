//! Brute-force verifiers for the solver.
//!
//! Everything here is deliberately naive: objectives are evaluated with
//! explicit index loops, random unitaries come from a local Gram–Schmidt, and
//! the largest singular value comes from power iteration. Nothing is shared
//! with the solver path apart from the matrix container itself, so a bug in
//! the SVD-based projection or in the trace identities cannot hide behind an
//! oracle that reuses them.
//!
//! Symmetric unitary samples use the Takagi form `Θ = U Uᵀ` with `U` Haar
//! distributed; every point of the manifold can be written this way.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fp::SurrogateMatrices;
use crate::linalg::{CMat, C64};
use crate::model::{ChannelSet, SystemConfig};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Plain triple-loop product.
pub fn naive_matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "naive_matmul: inner dimensions differ");
    let mut out = CMat::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = C64::default();
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn naive_transpose(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

fn naive_adjoint(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

fn naive_frobenius_sq(a: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc
}

/// Modified Gram–Schmidt on the columns of `a` (assumed full rank).
fn gram_schmidt(mut a: CMat) -> CMat {
    let (rows, cols) = a.shape();
    for j in 0..cols {
        for p in 0..j {
            let mut dot = C64::default();
            for i in 0..rows {
                dot += a[(i, p)].conj() * a[(i, j)];
            }
            for i in 0..rows {
                let v = a[(i, p)];
                a[(i, j)] -= dot * v;
            }
        }
        let mut norm = 0.0;
        for i in 0..rows {
            norm += a[(i, j)].norm_sqr();
        }
        let norm = norm.sqrt();
        for i in 0..rows {
            a[(i, j)] /= norm;
        }
    }
    a
}

/// Haar-distributed `n×n` unitary.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    gram_schmidt(gaussian_matrix(rng, n, n))
}

/// Diagonal matrix of independent uniform phases.
pub fn random_phase_diag<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    }
    d
}

/// `count` random points of the symmetric unitary manifold (`U Uᵀ`, `U` Haar).
pub fn random_feasible_theta<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<CMat> {
    (0..count)
        .map(|_| {
            let u = random_unitary(n, rng);
            naive_matmul(&u, &naive_transpose(&u))
        })
        .collect()
}

/// Unitary congruence `U Θ Uᵀ` with `U` a Gram–Schmidt-orthonormalized
/// `I + scale·G`; stays on the manifold and moves by `O(scale)`.
pub fn perturb_theta<R: Rng + ?Sized>(theta: &CMat, scale: f64, rng: &mut R) -> CMat {
    let n = theta.nrows();
    let g = gaussian_matrix(rng, n, n);
    let near_identity = CMat::from_fn(n, n, |i, j| {
        let base = if i == j { C64::new(1.0, 0.0) } else { C64::default() };
        base + g[(i, j)] * scale
    });
    let u = gram_schmidt(near_identity);
    naive_matmul(&naive_matmul(&u, theta), &naive_transpose(&u))
}

/// `count` random matrices with `‖W‖_F² = Pt`.
pub fn random_feasible_w<R: Rng + ?Sized>(l: usize, k: usize, pt: f64, count: usize, rng: &mut R) -> Vec<CMat> {
    (0..count)
        .map(|_| {
            let w = gaussian_matrix(rng, l, k);
            let scale = (pt / naive_frobenius_sq(&w)).sqrt();
            w.map(|z| z * scale)
        })
        .collect()
}

/// `2Re{tr(ΘM)} − tr(ΘXΘᴴY)` by explicit summation:
/// `Σ_{i,j} Θ_ij M_ji` and `Σ_{i,j,p,q} Θ_ij X_jp conj(Θ_qp) Y_qi`.
pub fn naive_theta_objective(mats: &SurrogateMatrices, theta: &CMat) -> f64 {
    let n = theta.nrows();
    let mut linear = C64::default();
    for i in 0..n {
        for j in 0..n {
            linear += theta[(i, j)] * mats.m[(j, i)];
        }
    }
    // T = Θ X, then tr(T Θᴴ Y) = Σ_{i,p,q} T_ip conj(Θ_qp) Y_qi
    let mut t = CMat::zeros(n, n);
    for i in 0..n {
        for p in 0..n {
            let mut acc = C64::default();
            for j in 0..n {
                acc += theta[(i, j)] * mats.x[(j, p)];
            }
            t[(i, p)] = acc;
        }
    }
    let mut quad = C64::default();
    for i in 0..n {
        for q in 0..n {
            let mut acc = C64::default();
            for p in 0..n {
                acc += t[(i, p)] * theta[(q, p)].conj();
            }
            quad += acc * mats.y[(q, i)];
        }
    }
    2.0 * linear.re - quad.re
}

/// Best sample under [`naive_theta_objective`]; `None` when `samples` is empty.
pub fn brute_force_theta_objective(mats: &SurrogateMatrices, samples: &[CMat]) -> Option<(f64, CMat)> {
    let mut best: Option<(f64, usize)> = None;
    for (idx, theta) in samples.iter().enumerate() {
        let value = naive_theta_objective(mats, theta);
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, idx));
        }
    }
    best.map(|(value, idx)| (value, samples[idx].clone()))
}

/// Global random sampling followed by a shrinking-radius hill climb.
pub fn random_search_theta<R: Rng + ?Sized>(
    mats: &SurrogateMatrices,
    global_samples: usize,
    local_steps: usize,
    rng: &mut R,
) -> (f64, CMat) {
    let n = mats.m.nrows();
    let mut best_value = f64::NEG_INFINITY;
    let mut best = CMat::identity(n, n);
    for _ in 0..global_samples {
        let theta = random_feasible_theta(n, 1, rng).pop().expect("one sample");
        let value = naive_theta_objective(mats, &theta);
        if value > best_value {
            best_value = value;
            best = theta;
        }
    }
    let mut scale = 0.3;
    let mut since_improvement = 0;
    for _ in 0..local_steps {
        let candidate = perturb_theta(&best, scale, rng);
        let value = naive_theta_objective(mats, &candidate);
        if value > best_value {
            best_value = value;
            best = candidate;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= 50 {
                scale = (scale * 0.5).max(1e-6);
                since_improvement = 0;
            }
        }
    }
    (best_value, best)
}

/// `2Re{Σ_k σ₁_k f_kᴴw_k} − Σ_k σ₂_k Σ_j |f_kᴴw_j|²` by explicit loops.
pub fn naive_w_objective(f: &CMat, sigma1: &[C64], sigma2: &[f64], w: &CMat) -> f64 {
    let (l, k) = f.shape();
    let mut value = 0.0;
    for u in 0..k {
        for j in 0..k {
            let mut g = C64::default();
            for a in 0..l {
                g += f[(a, u)].conj() * w[(a, j)];
            }
            if j == u {
                value += 2.0 * (sigma1[u] * g).re;
            }
            value -= sigma2[u] * g.norm_sqr();
        }
    }
    value
}

/// Random sphere samples followed by a shrinking-radius hill climb.
pub fn random_search_w<R: Rng + ?Sized>(
    f: &CMat,
    sigma1: &[C64],
    sigma2: &[f64],
    pt: f64,
    global_samples: usize,
    local_steps: usize,
    rng: &mut R,
) -> (f64, CMat) {
    let (l, k) = f.shape();
    let mut best_value = f64::NEG_INFINITY;
    let mut best = CMat::zeros(l, k);
    for w in random_feasible_w(l, k, pt, global_samples, rng) {
        let value = naive_w_objective(f, sigma1, sigma2, &w);
        if value > best_value {
            best_value = value;
            best = w;
        }
    }
    let mut scale = 0.3 * pt.sqrt();
    let mut since_improvement = 0;
    for _ in 0..local_steps {
        let step = gaussian_matrix(rng, l, k);
        let moved = CMat::from_fn(l, k, |i, j| best[(i, j)] + step[(i, j)] * scale);
        let norm_scale = (pt / naive_frobenius_sq(&moved)).sqrt();
        let candidate = moved.map(|z| z * norm_scale);
        let value = naive_w_objective(f, sigma1, sigma2, &candidate);
        if value > best_value {
            best_value = value;
            best = candidate;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= 50 {
                scale = (scale * 0.5).max(1e-7 * pt.sqrt());
                since_improvement = 0;
            }
        }
    }
    (best_value, best)
}

/// Largest singular value by power iteration on `EᴴE`.
pub fn largest_singular_value(e: &CMat) -> f64 {
    let gram = naive_matmul(&naive_adjoint(e), e);
    let n = gram.nrows();
    let mut v = CMat::from_fn(n, 1, |i, _| C64::new(1.0 + i as f64 * 0.37, 0.11 * i as f64));
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let next = naive_matmul(&gram, &v);
        let norm = naive_frobenius_sq(&next).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let rayleigh = {
            let mut acc = C64::default();
            for i in 0..n {
                acc += v[(i, 0)].conj() * next[(i, 0)];
            }
            acc.re / naive_frobenius_sq(&v)
        };
        v = next.map(|z| z / norm);
        if (rayleigh - lambda).abs() <= 1e-15 * rayleigh {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
    }
    lambda.max(0.0).sqrt()
}

/// Single-user rate ceiling `log₂(1 + Pt ‖h₁‖² σ_max(E)² / σ₁²)`.
///
/// `|h₁ᴴΘEw|² ≤ ‖h₁‖² ‖Ew‖² ≤ ‖h₁‖² σ_max(E)² Pt` for any unitary `Θ`, and the
/// bound is attained by the symmetric unitary `Θ` mapping the top left
/// singular direction of `E` onto `h₁/‖h₁‖`.
pub fn single_user_bound(channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
    if config.users != 1 || channels.users() != 1 {
        return Err(Error::NotSingleUser(config.users.max(channels.users())));
    }
    let h = CMat::from_fn(channels.h.nrows(), 1, |i, _| channels.h[(i, 0)]);
    let h_norm_sq = naive_frobenius_sq(&h);
    let s_max = largest_singular_value(&channels.e);
    Ok((config.pt * h_norm_sq * s_max * s_max / config.noise_powers[0]).ln_1p() / std::f64::consts::LN_2)
}

/// Relative discrepancy between the central finite-difference slope of
/// `objective` and that of `surrogate` at `point` along `direction`.
///
/// The surrogate is expected to be affine along the line (the linearization
/// at `Φ = point`), so its central difference is its exact slope.
pub fn finite_difference_check(
    objective: impl Fn(&CMat) -> f64,
    surrogate: impl Fn(&CMat) -> f64,
    point: &CMat,
    direction: &CMat,
    step: f64,
) -> f64 {
    let shifted = |t: f64| CMat::from_fn(point.nrows(), point.ncols(), |i, j| point[(i, j)] + direction[(i, j)] * t);
    let plus = shifted(step);
    let minus = shifted(-step);
    let fd = (objective(&plus) - objective(&minus)) / (2.0 * step);
    let slope = (surrogate(&plus) - surrogate(&minus)) / (2.0 * step);
    let scale = fd.abs().max(slope.abs());
    if scale == 0.0 {
        0.0
    } else {
        (fd - slope).abs() / scale
    }
}

/// Tangent direction `i(HΘ + ΘHᵀ)` of the curve `t ↦ e^{itH} Θ e^{itH}ᵀ` for Hermitian `H`.
pub fn manifold_tangent(theta: &CMat, hermitian: &CMat) -> CMat {
    let a = naive_matmul(hermitian, theta);
    let b = naive_matmul(theta, &naive_transpose(hermitian));
    CMat::from_fn(theta.nrows(), theta.ncols(), |i, j| (a[(i, j)] + b[(i, j)]) * C64::new(0.0, 1.0))
}

/// Random Hermitian matrix with CN(0,1)-scale entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(rng, n, n);
    let gh = naive_adjoint(&g);
    CMat::from_fn(n, n, |i, j| (g[(i, j)] + gh[(i, j)]) * 0.5)
}

/// Random Hermitian PSD matrix `G Gᴴ` with `G` n×rank.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(rng, n, rank);
    let p = naive_matmul(&g, &naive_adjoint(&g));
    let ph = naive_adjoint(&p);
    CMat::from_fn(n, n, |i, j| (p[(i, j)] + ph[(i, j)]) * 0.5)
}
