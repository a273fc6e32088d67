//! Positive semidefinite matrix functions: inverse, log-determinant, square
//! root and the algebraic Riccati solve `R A R = B`.

use alloc::format;

use num_complex::Complex64;

use super::eigen::{eigh, HermitianEigen};
use super::CMatrix;
use crate::error::{contract, Error, Result};

/// Relative diagonal loading added when a matrix is numerically singular.
pub const LOADING: f64 = 1e-10;
/// Smallest eigenvalue, relative to the trace, below which loading kicks in.
pub const LOADING_TRIGGER: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL * max` are treated as zero.
pub const PSD_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-9;

fn require_hermitian(a: &CMatrix, what: &str) -> Result<()> {
    if a.is_hermitian(HERMITIAN_TOL) {
        Ok(())
    } else {
        Err(contract(format!("{what} requires a Hermitian matrix")))
    }
}

fn check_psd_spectrum(min: f64, max: f64, what: &str) -> Result<()> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(contract(format!("{what}: non-finite eigenvalue")));
    }
    if min < -PSD_TOL * max.abs().max(f64::MIN_POSITIVE) {
        return Err(contract(format!(
            "{what}: matrix is not positive semidefinite (eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Loading amount for a spectrum `[min, .., max]` with trace `tr` and size `dim`.
fn loading_for(min: f64, tr: f64, dim: usize) -> f64 {
    if min < LOADING_TRIGGER * tr {
        LOADING * tr / dim as f64
    } else {
        0.0
    }
}

/// Eigendecomposition with negative round-off clamped to zero and diagonal
/// loading applied when the matrix is near singular.
fn loaded_eigen(a: &CMatrix, what: &str) -> Result<HermitianEigen> {
    require_hermitian(a, what)?;
    let mut e = eigh(a)?;
    check_psd_spectrum(e.min(), e.max(), what)?;
    let tr: f64 = e.values.iter().map(|v| v.max(0.0)).sum();
    if tr <= 0.0 {
        return Err(Error::Singular);
    }
    let load = loading_for(e.min(), tr, a.dim());
    for v in &mut e.values {
        *v = v.max(0.0) + load;
    }
    Ok(e)
}

/// `Re Tr(A B)`.
pub fn trace_prod(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    let d = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc.re)
}

/// Closed-form spectrum extremes of a 2x2 Hermitian matrix: `(min, max, det)`.
fn spectrum_2x2(a: &CMatrix) -> (f64, f64, f64) {
    let p = a[(0, 0)].re;
    let q = a[(1, 1)].re;
    let b2 = a[(0, 1)].norm_sqr();
    let half = 0.5 * (p + q);
    let disc = (0.25 * (p - q) * (p - q) + b2).sqrt();
    let max = half + disc;
    let det = p * q - b2;
    let min = if max > 0.0 { det / max } else { half - disc };
    (min, max, det)
}

/// Inverse of a positive semidefinite Hermitian matrix.
///
/// Near-singular inputs (smallest eigenvalue below `1e-12 Tr(A)`) are loaded
/// with `1e-10 Tr(A)/M` on the diagonal before inversion.
pub fn inv_psd(a: &CMatrix) -> Result<CMatrix> {
    if a.dim() == 2 {
        require_hermitian(a, "inv_psd")?;
        let (min, max, det) = spectrum_2x2(a);
        check_psd_spectrum(min, max, "inv_psd")?;
        let tr = a.real_trace();
        if tr <= 0.0 {
            return Err(Error::Singular);
        }
        if loading_for(min, tr, 2) == 0.0 {
            let inv_det = 1.0 / det;
            let mut out = CMatrix::zeros(2);
            out[(0, 0)] = Complex64::new(a[(1, 1)].re * inv_det, 0.0);
            out[(1, 1)] = Complex64::new(a[(0, 0)].re * inv_det, 0.0);
            out[(0, 1)] = -a[(0, 1)] * inv_det;
            out[(1, 0)] = out[(0, 1)].conj();
            return Ok(out);
        }
    }
    let e = loaded_eigen(a, "inv_psd")?;
    Ok(e.reconstruct_with(|v| 1.0 / v))
}

/// `log det A` of a positive semidefinite matrix, after the same loading as [`inv_psd`].
pub fn logdet_psd(a: &CMatrix) -> Result<f64> {
    if a.dim() == 2 {
        require_hermitian(a, "logdet_psd")?;
        let (min, max, det) = spectrum_2x2(a);
        check_psd_spectrum(min, max, "logdet_psd")?;
        let tr = a.real_trace();
        if tr <= 0.0 {
            return Err(Error::Singular);
        }
        if loading_for(min, tr, 2) == 0.0 {
            return Ok(det.ln());
        }
    }
    let e = loaded_eigen(a, "logdet_psd")?;
    Ok(e.values.iter().map(|v| v.ln()).sum())
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(a: &CMatrix) -> Result<CMatrix> {
    require_hermitian(a, "sqrt_psd")?;
    let e = eigh(a)?;
    check_psd_spectrum(e.min(), e.max(), "sqrt_psd")?;
    Ok(e.reconstruct_with(|v| v.max(0.0).sqrt()))
}

/// Unique positive semidefinite solution of `R A R = B`.
///
/// Computed as `A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}`, the matrix
/// geometric mean of `A^{-1}` and `B`. `A` is loaded like [`inv_psd`] when it
/// is near singular.
pub fn riccati_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.check_same_dim(b)?;
    require_hermitian(b, "riccati_solve")?;
    let ea = loaded_eigen(a, "riccati_solve")?;
    let a_half = ea.reconstruct_with(|v| v.sqrt());
    let a_inv_half = ea.reconstruct_with(|v| 1.0 / v.sqrt());
    let mut inner = &(&a_half * b) * &a_half;
    inner.hermitize();
    let root = sqrt_psd(&inner)?;
    let mut r = &(&a_inv_half * &root) * &a_inv_half;
    r.hermitize();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(d: &[f64]) -> CMatrix {
        CMatrix::from_real_diag(d)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() < tol
    }

    fn sample_pd() -> CMatrix {
        CMatrix::from_row_major(vec![c(3.0, 0.0), c(0.5, -1.2), c(0.5, 1.2), c(2.0, 0.0)]).unwrap()
    }

    #[test]
    fn trace_prod_examples() {
        assert_eq!(trace_prod(&CMatrix::identity(2), &CMatrix::identity(2)).unwrap(), 2.0);
        assert_eq!(trace_prod(&diag(&[1.0, 3.0]), &diag(&[2.0, 4.0])).unwrap(), 14.0);
        assert!(matches!(
            trace_prod(&CMatrix::identity(2), &CMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert!(close(&inv_psd(&CMatrix::identity(2)).unwrap(), &CMatrix::identity(2), 1e-15));
        assert!(close(&inv_psd(&diag(&[2.0, 4.0])).unwrap(), &diag(&[0.5, 0.25]), 1e-15));
        assert!(close(&inv_psd(&diag(&[2.0, 4.0, 8.0])).unwrap(), &diag(&[0.5, 0.25, 0.125]), 1e-15));
        let a = sample_pd();
        let r = inv_psd(&a).unwrap();
        assert!((&(&a * &r) - &CMatrix::identity(2)).frobenius_norm() < 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn inverse_errors() {
        assert_eq!(inv_psd(&CMatrix::zeros(2)).unwrap_err(), Error::Singular);
        assert_eq!(inv_psd(&CMatrix::zeros(3)).unwrap_err(), Error::Singular);
        let skew = CMatrix::from_row_major(vec![c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(matches!(inv_psd(&skew), Err(Error::ContractViolation(_))));
        assert!(matches!(inv_psd(&diag(&[1.0, -1.0])), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn singular_psd_is_loaded() {
        // rank one: loading makes it invertible and finite
        let a = CMatrix::outer(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let r = inv_psd(&a).unwrap();
        assert!(r.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert_eq!(r.hermitian_defect(), 0.0);
        let l = logdet_psd(&a).unwrap();
        assert!(l.is_finite());
        // loaded spectrum is {eps*tr/2, 2 + eps*tr/2}
        let load = LOADING * 2.0 / 2.0;
        assert!((l - (load.ln() + (2.0 + load).ln())).abs() < 1e-6);
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_psd(&CMatrix::identity(3)).unwrap(), 0.0);
        assert!((logdet_psd(&diag(&[E, E * E])).unwrap() - 3.0).abs() < 1e-14);
        assert!((logdet_psd(&diag(&[E, E * E, 1.0])).unwrap() - 3.0).abs() < 1e-14);
        let a = sample_pd();
        let det = a[(0, 0)].re * a[(1, 1)].re - a[(0, 1)].norm_sqr();
        assert!((logdet_psd(&a).unwrap() - det.ln()).abs() < 1e-10);
        assert!(logdet_psd(&diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn sqrt_examples() {
        assert!(close(&sqrt_psd(&CMatrix::identity(2)).unwrap(), &CMatrix::identity(2), 1e-15));
        assert!(close(&sqrt_psd(&diag(&[4.0, 9.0])).unwrap(), &diag(&[2.0, 3.0]), 1e-14));
        let a = sample_pd();
        let s = sqrt_psd(&a).unwrap();
        assert!(close(&(&s * &s), &a, 1e-8 * a.frobenius_norm()));
        assert!(eigh(&s).unwrap().min() > 0.0);
    }

    #[test]
    fn riccati_examples() {
        let i2 = CMatrix::identity(2);
        assert!(close(&riccati_solve(&i2, &i2).unwrap(), &i2, 1e-14));
        assert!(close(&riccati_solve(&i2, &diag(&[4.0, 9.0])).unwrap(), &diag(&[2.0, 3.0]), 1e-14));
        let a = sample_pd();
        let b = CMatrix::from_row_major(vec![c(1.0, 0.0), c(0.2, 0.3), c(0.2, -0.3), c(0.7, 0.0)])
            .unwrap();
        let r = riccati_solve(&a, &b).unwrap();
        let res = (&(&(&r * &a) * &r) - &b).frobenius_norm();
        assert!(res < 1e-8 * b.frobenius_norm());
        assert_eq!(r.hermitian_defect(), 0.0);
    }

    #[test]
    fn riccati_rejects_indefinite() {
        assert!(riccati_solve(&diag(&[1.0, -2.0]), &CMatrix::identity(2)).is_err());
        assert!(riccati_solve(&CMatrix::identity(2), &diag(&[1.0, -2.0])).is_err());
    }
}
