//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::DMatrix;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Tolerance used for symmetric-unitary membership checks.
pub const MANIFOLD_TOL: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    frobenius_sq(a).sqrt()
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// ‖A − Aᵀ‖_F (plain transpose, no conjugation).
pub fn symmetry_error(a: &CMat) -> f64 {
    frobenius(&(a - a.transpose()))
}

/// ‖A·Aᴴ − I‖_F.
pub fn unitarity_error(a: &CMat) -> f64 {
    let n = a.nrows();
    frobenius(&(a * a.adjoint() - CMat::identity(n, n)))
}

/// ‖A − Aᴴ‖_F.
pub fn hermitian_error(a: &CMat) -> f64 {
    frobenius(&(a - a.adjoint()))
}

pub fn is_symmetric_unitary(a: &CMat, tol: f64) -> bool {
    a.is_square() && symmetry_error(a) <= tol && unitarity_error(a) <= tol
}

/// Real diagonal matrix from a slice.
pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn complex_diag(values: &[C64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { values[i] } else { C64::default() })
}

/// Real part of the trace.
pub fn re_trace(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}
