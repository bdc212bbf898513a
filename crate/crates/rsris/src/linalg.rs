//! Dense complex Hermitian helpers shared by the channel model and the
//! optimizers: symmetrization, PSD square roots, quadratic forms and the
//! power-iteration eigensolver building blocks.

use nalgebra::linalg::SymmetricEigen;

use crate::{C64, CMat, CVec, Error, Result};

/// Relative eigenvalue floor used when taking PSD square roots: eigenvalues
/// below `SQRT_CLIP_REL * trace` are treated as exact zeros.
pub const SQRT_CLIP_REL: f64 = 1e-12;

/// Returns the Hermitian part `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    let half = C64::new(0.5, 0.0);
    (a + a.adjoint()) * half
}

/// Largest entrywise deviation from Hermitian symmetry, `max |A_ij - conj(A_ji)|`.
pub fn max_asymmetry(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Real trace of a (nominally Hermitian) matrix.
pub fn real_trace(a: &CMat) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Hermitian PSD square root via eigendecomposition. Negative eigenvalues
/// (numerically rank-deficient inputs) are clipped to zero; the clip
/// threshold is `SQRT_CLIP_REL * trace`.
pub fn hermitian_sqrt(a: &CMat) -> CMat {
    let n = a.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let trace = real_trace(a).abs();
    let floor = SQRT_CLIP_REL * trace;
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let lam = eig.eigenvalues[j];
        let root = if lam <= floor { 0.0 } else { lam.sqrt() };
        col *= C64::new(root, 0.0);
    }
    &scaled * eig.eigenvectors.adjoint()
}

/// Real quadratic form `Re{x^H A x}` (exactly real for Hermitian `A`).
pub fn qform(a: &CMat, x: &CVec) -> f64 {
    let ax = a * x;
    x.dotc(&ax).re
}

/// Hadamard (entrywise) product.
pub fn hadamard(a: &CMat, b: &CMat) -> CMat {
    a.component_mul(b)
}

/// Lower bound on the spectrum of a Hermitian matrix from Gershgorin discs.
pub fn gershgorin_lower(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let radius: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| a[(i, j)].norm())
            .sum();
        lo = lo.min(a[(i, i)].re - radius);
    }
    if lo.is_finite() {
        lo
    } else {
        0.0
    }
}

/// Validates that `a` is square with the expected size, Hermitian within
/// `herm_tol` and PSD within `-psd_rel * trace`. Returns a description of the
/// first violation.
pub fn check_hermitian_psd(
    name: &str,
    a: &CMat,
    expected: usize,
    herm_tol: f64,
    psd_rel: f64,
) -> Result<()> {
    if a.nrows() != expected || a.ncols() != expected {
        return Err(Error::Dimension(format!(
            "{name}: expected {expected}x{expected}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = max_asymmetry(a);
    if asym > herm_tol {
        return Err(Error::Stats(format!(
            "{name} is not Hermitian: max asymmetry {asym:.3e} exceeds {herm_tol:.1e}"
        )));
    }
    if expected > 0 {
        let min_eig = min_eigenvalue(a);
        let bound = -psd_rel * real_trace(a).abs();
        if min_eig < bound {
            return Err(Error::Stats(format!(
                "{name} is not PSD: min eigenvalue {min_eig:.3e} below {bound:.3e}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sqrt_of_diagonal() {
        let a = dmatrix![c(4.0, 0.0), c(0.0, 0.0); c(0.0, 0.0), c(9.0, 0.0)];
        let r = hermitian_sqrt(&a);
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-12);
        assert!(r[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let b = dmatrix![c(1.0, 0.0), c(0.4, 0.3); c(0.2, -0.1), c(0.8, 0.0)];
        let a = &b * b.adjoint();
        let r = hermitian_sqrt(&a);
        let back = &r * r.adjoint();
        assert!((&back - &a).norm() < 1e-10);
    }

    #[test]
    fn rank_deficient_clips() {
        let v = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let a = &v * v.adjoint(); // rank 1
        let r = hermitian_sqrt(&a);
        let back = &r * r.adjoint();
        assert!((&back - &a).norm() < 1e-10);
    }

    #[test]
    fn qform_is_real_for_hermitian() {
        let a = dmatrix![c(2.0, 0.0), c(0.5, 0.25); c(0.5, -0.25), c(1.0, 0.0)];
        let x = CVec::from_vec(vec![c(0.3, -0.7), c(1.1, 0.2)]);
        let q = qform(&a, &x);
        let ax = &a * &x;
        assert!((x.dotc(&ax).im).abs() < 1e-12);
        assert!(q.is_finite());
    }

    #[test]
    fn asymmetry_detects_violation() {
        let mut a = dmatrix![c(1.0, 0.0), c(0.5, 0.0); c(0.5, 0.0), c(1.0, 0.0)];
        a[(0, 1)] = c(0.5, 0.3);
        assert!(max_asymmetry(&a) > 0.29);
        assert!(check_hermitian_psd("a", &a, 2, 1e-10, 1e-10).is_err());
    }
}
