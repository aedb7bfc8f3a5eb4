//! Projections onto the two feasible sets and the spectral shift that makes
//! the PSLA linearization a valid minorant.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Relative tolerance for the Hermitian check in [`spectral_shift`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Nearest symmetric unitary matrix to `z` in Frobenius norm.
///
/// With `Ẑ = Z + Zᵀ = U S Vᴴ` (non-increasing singular values) and `R` the
/// numerical rank of `Ẑ`, returns `[U_R, conj(V_{N−R})] Vᴴ`. The left null
/// space of the symmetric `Ẑ` is spanned by `conj(V_{N−R})`, which makes the
/// completed basis unitary and the product symmetric. `Ẑ = 0` maps to `I`.
pub fn project_symmetric_unitary(z: &CMat) -> Result<CMat> {
    if !z.is_square() {
        return Err(Error::dims("project_symmetric_unitary", (z.nrows(), z.nrows()), z.shape()));
    }
    if !linalg::is_finite(z) {
        return Err(Error::NonFinite { context: "project_symmetric_unitary input" });
    }
    let n = z.nrows();
    let z_hat = z + z.transpose();

    let (u, s, v_t) = svd(&z_hat)?;
    let s_max = s.first().copied().unwrap_or(0.0);
    if s_max == 0.0 {
        return Ok(CMat::identity(n, n));
    }
    let rank = s.iter().filter(|&&x| x > RANK_THRESHOLD * s_max).count();
    // column j of conj(V) is row j of Vᴴ
    let u_hat = CMat::from_fn(n, n, |i, j| if j < rank { u[(i, j)] } else { v_t[(j, i)] });
    Ok(u_hat * v_t)
}

/// Full SVD `A = U diag(s) Vᴴ` of a square matrix via LAPACK `zgesvd`,
/// singular values non-increasing. Returns `(U, s, Vᴴ)`.
fn svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let n = a.nrows();
    let dim = i32::try_from(n).map_err(|_| Error::dims("svd", (i32::MAX as usize, 0), a.shape()))?;
    let lda = dim.max(1);
    let mut a = a.clone();
    let mut s = vec![0.0; n];
    let mut u = CMat::zeros(n, n);
    let mut v_t = CMat::zeros(n, n);
    let mut rwork = vec![0.0; 5 * n.max(1)];
    let mut info = 0;
    let job = b'A' as std::ffi::c_char;
    // `Complex<f64>` is `#[repr(C)] { re, im }`, the layout LAPACK expects,
    // and nalgebra stores matrices column-major.
    let ptr = |m: &mut CMat| m.as_mut_ptr().cast::<lapack_sys::__BindgenComplex<f64>>();
    let mut call = |work: &mut [C64], lwork: i32, info: &mut i32| unsafe {
        lapack_sys::zgesvd_(
            &job,
            &job,
            &dim,
            &dim,
            ptr(&mut a),
            &lda,
            s.as_mut_ptr(),
            ptr(&mut u),
            &lda,
            ptr(&mut v_t),
            &lda,
            work.as_mut_ptr().cast(),
            &lwork,
            rwork.as_mut_ptr(),
            info,
        )
    };
    let mut query = [C64::default()];
    call(&mut query, -1, &mut info);
    if info != 0 {
        return Err(Error::NonFinite { context: "zgesvd workspace query failed" });
    }
    let lwork = (query[0].re as i32).max(1);
    let mut work = vec![C64::default(); lwork as usize];
    call(&mut work, lwork, &mut info);
    if info != 0 {
        return Err(Error::NonFinite { context: "zgesvd did not converge" });
    }
    Ok((u, s, v_t))
}

/// `√Pt · W / ‖W‖_F`, the nearest point with `‖W‖_F² = Pt`.
pub fn project_power_sphere(w: &CMat, pt: f64) -> Result<CMat> {
    let norm = linalg::frobenius(w);
    if norm == 0.0 {
        return Err(Error::ZeroProjection);
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite { context: "project_power_sphere input" });
    }
    Ok(w * c(pt.sqrt() / norm, 0.0))
}

/// Smallest `ρ ≥ 0` with `ρI − A` positive semi-definite, i.e. `λ_max(A)`.
pub fn spectral_shift(a: &CMat) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dims("spectral_shift", (a.nrows(), a.nrows()), a.shape()));
    }
    if !linalg::is_finite(a) {
        return Err(Error::NonFinite { context: "spectral_shift input" });
    }
    let scale = linalg::frobenius(a);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let deviation = linalg::hermitian_error(a);
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, MANIFOLD_TOL};
    use crate::model::complex_gaussian_matrix;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_fixed() {
        let p = project_symmetric_unitary(&CMat::identity(5, 5)).unwrap();
        assert!(linalg::frobenius(&(p - CMat::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn zero_maps_to_identity() {
        let p = project_symmetric_unitary(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(p, CMat::identity(3, 3));
    }

    #[test]
    fn scalar_phase() {
        let z = C64::new(-1.5, 2.0);
        let p = project_symmetric_unitary(&CMat::from_element(1, 1, z)).unwrap();
        assert!((p[(0, 0)] - z / z.norm()).norm() < 1e-15);
    }

    #[test]
    fn skew_symmetric_input_uses_null_space_completion() {
        // Z + Zᵀ = 0 for skew Z: the whole space is null, any symmetric unitary is optimal
        let z = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let p = project_symmetric_unitary(&z).unwrap();
        assert!(linalg::is_symmetric_unitary(&p, MANIFOLD_TOL));
    }

    #[test]
    fn rank_deficient_input_stays_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = complex_gaussian_matrix(&mut rng, 6, 2);
        let z = &a * a.transpose(); // symmetric, rank 2
        let p = project_symmetric_unitary(&z).unwrap();
        assert!(linalg::is_symmetric_unitary(&p, MANIFOLD_TOL));
    }

    #[test]
    fn non_finite_rejected() {
        let mut z = CMat::identity(2, 2);
        z[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(project_symmetric_unitary(&z), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let z = complex_gaussian_matrix(&mut rng, 4, 4);
            let p = project_symmetric_unitary(&z).unwrap();
            let d = linalg::frobenius(&(&z - &p));
            let mut samples = oracle::random_feasible_theta(4, 5000, &mut rng);
            // projected random points with diagonal-phase congruences
            for _ in 0..5000 {
                let q = project_symmetric_unitary(&complex_gaussian_matrix(&mut rng, 4, 4)).unwrap();
                let phases = oracle::random_phase_diag(4, &mut rng);
                samples.push(&phases * q * &phases);
            }
            for q in &samples {
                assert!(d <= linalg::frobenius(&(&z - q)) + 1e-9);
            }
        }
    }

    #[test]
    fn sphere_fixed_point_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w0 = complex_gaussian_matrix(&mut rng, 4, 3);
        let pt = 2.5;
        let on = project_power_sphere(&w0, pt).unwrap();
        assert!((linalg::frobenius_sq(&on) - pt).abs() < 1e-12 * pt);
        let again = project_power_sphere(&on, pt).unwrap();
        assert!(linalg::frobenius(&(&again - &on)) < 1e-14);
        let scaled = project_power_sphere(&(&w0 * c(7.3, 0.0)), pt).unwrap();
        assert!(linalg::frobenius(&(&scaled - &on)) < 1e-14);
        assert!(matches!(project_power_sphere(&CMat::zeros(2, 2), pt), Err(Error::ZeroProjection)));
    }

    #[test]
    fn sphere_projection_beats_random_sphere_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = complex_gaussian_matrix(&mut rng, 4, 3);
        let pt = 1.7;
        let p = project_power_sphere(&w, pt).unwrap();
        let d = linalg::frobenius(&(&w - &p));
        for q in oracle::random_feasible_w(4, 3, pt, 10_000, &mut rng) {
            assert!(d <= linalg::frobenius(&(&w - &q)) + 1e-12);
        }
    }

    #[test]
    fn shift_simple_cases() {
        assert_eq!(spectral_shift(&CMat::zeros(3, 3)).unwrap(), 0.0);
        let d = linalg::real_diag(&[1.0, 3.0, 2.0]);
        assert!((spectral_shift(&d).unwrap() - 3.0).abs() < 1e-14);
        let not_herm = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(spectral_shift(&not_herm), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn shifted_matrix_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1, 3, 8, 20] {
            let a = complex_gaussian_matrix(&mut rng, n, n + 2);
            let psd = &a * a.adjoint();
            let psd = (&psd + psd.adjoint()) * c(0.5, 0.0);
            let rho = spectral_shift(&psd).unwrap();
            let shifted = CMat::identity(n, n) * c(rho, 0.0) - &psd;
            // independent check: Rayleigh quotients of random vectors
            for _ in 0..200 {
                let v = complex_gaussian_matrix(&mut rng, n, 1);
                let q = (v.adjoint() * &shifted * &v)[(0, 0)].re / linalg::frobenius_sq(&v);
                assert!(q >= -1e-9 * rho.max(1.0));
            }
            let min_eig = shifted.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-9 * rho);
        }
    }

    #[test]
    fn constant_shift_on_manifold() {
        // with unitary Θ, tr(ΘXΘᴴ·ρI) = ρ tr(X): adding it changes the objective by a constant
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = complex_gaussian_matrix(&mut rng, 4, 4);
        let b = complex_gaussian_matrix(&mut rng, 4, 2);
        let m = complex_gaussian_matrix(&mut rng, 4, 4);
        let x = &a * a.adjoint();
        let y = &b * b.adjoint();
        let rho = spectral_shift(&y).unwrap();
        let shifted = CMat::identity(4, 4) * c(rho, 0.0) - &y;
        let expected = rho * linalg::re_trace(&x);
        for theta in oracle::random_feasible_theta(4, 100, &mut rng) {
            let lin = 2.0 * linalg::re_trace(&(&theta * &m));
            let f13 = lin - linalg::re_trace(&(&theta * &x * theta.adjoint() * &y));
            let f14 = lin + linalg::re_trace(&(&theta * &x * theta.adjoint() * &shifted));
            assert!((f14 - f13 - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn projection_lands_on_manifold(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = complex_gaussian_matrix(&mut rng, n, n);
            let p = project_symmetric_unitary(&z).unwrap();
            prop_assert!(linalg::symmetry_error(&p) <= MANIFOLD_TOL);
            prop_assert!(linalg::unitarity_error(&p) <= MANIFOLD_TOL);
        }

        #[test]
        fn rank_deficient_projection_lands_on_manifold(seed in any::<u64>(), n in 2usize..16, r in 1usize..16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = r.min(n);
            let z = complex_gaussian_matrix(&mut rng, n, r) * complex_gaussian_matrix(&mut rng, r, n);
            let p = project_symmetric_unitary(&z).unwrap();
            prop_assert!(linalg::symmetry_error(&p) <= MANIFOLD_TOL);
            prop_assert!(linalg::unitarity_error(&p) <= MANIFOLD_TOL);
        }

        #[test]
        fn projection_is_idempotent(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = oracle::random_feasible_theta(n, 1, &mut rng).pop().unwrap();
            let p = project_symmetric_unitary(&q).unwrap();
            prop_assert!(linalg::frobenius(&(&p - &q)) <= 1e-8);
        }

        #[test]
        fn sphere_projection_idempotent(seed in any::<u64>(), pt in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = complex_gaussian_matrix(&mut rng, 3, 2);
            let p = project_power_sphere(&w, pt).unwrap();
            let pp = project_power_sphere(&p, pt).unwrap();
            prop_assert!(linalg::frobenius(&(&p - &pp)) <= 1e-12 * pt.sqrt());
            prop_assert!((linalg::frobenius_sq(&p) - pt).abs() <= 1e-12 * pt);
        }
    }
}
