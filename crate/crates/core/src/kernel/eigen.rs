//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::CMatrix;
use crate::error::{contract, Result};

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition `A = V diag(values) V^H` of a Hermitian matrix.
///
/// `values` are sorted ascending; column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V diag(g(values)) V^H`, Hermitized.
    pub fn reconstruct_with(&self, mut g: impl FnMut(f64) -> f64) -> CMatrix {
        let d = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| g(v)).collect();
        let v = &self.vectors;
        let mut out = CMatrix::from_fn(d, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &s) in mapped.iter().enumerate() {
                acc += v[(i, k)] * v[(j, k)].conj() * s;
            }
            acc
        });
        out.hermitize();
        out
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the classical real Jacobi rotation to the resulting symmetric 2x2 block.
pub fn eigh(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_hermitian(1e-9) {
        return Err(contract("eigendecomposition requires a Hermitian matrix"));
    }
    let n = a.dim();
    let mut m = a.clone();
    m.hermitize();
    let mut v = CMatrix::identity(n);

    let scale = m.frobenius_norm();
    if scale == 0.0 || n == 1 {
        let values = (0..n).map(|i| m[(i, i)].re).collect();
        return Ok(HermitianEigen { values, vectors: v });
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    // Phase that makes the pivot real and positive.
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U acts on columns p, q: U_pp = c, U_pq = s, U_qp = -s conj(phase), U_qq = c conj(phase).
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    let n = m.dim();
    for i in 0..n {
        let aip = m[(i, p)];
        let aiq = m[(i, q)];
        m[(i, p)] = aip * upp + aiq * uqp;
        m[(i, q)] = aip * upq + aiq * uqq;
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * upp + viq * uqp;
        v[(i, q)] = vip * upq + viq * uqq;
    }
    for j in 0..n {
        let apj = m[(p, j)];
        let aqj = m[(q, j)];
        m[(p, j)] = upp.conj() * apj + uqp.conj() * aqj;
        m[(q, j)] = upq.conj() * apj + uqq.conj() * aqj;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(a: &CMatrix, e: &HermitianEigen) -> f64 {
        (&e.reconstruct_with(|x| x) - a).frobenius_norm()
    }

    #[test]
    fn diagonal_is_its_own_decomposition() {
        let a = CMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = eigh(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_complex() {
        // eigenvalues of [[2, 1+i],[1-i, 3]] are (5 ± sqrt(9)) / 2 = 1, 4
        let a = CMatrix::from_row_major(vec![c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)])
            .unwrap();
        let e = eigh(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 4.0).abs() < 1e-14);
        assert!(residual(&a, &e) < 1e-13);
    }

    #[test]
    fn four_by_four_reconstructs_and_is_unitary() {
        let a = CMatrix::from_fn(4, |i, j| {
            let base = c((i + 2 * j) as f64 * 0.37, (i as f64 - j as f64) * 0.41);
            if i == j {
                c(base.re + 5.0, 0.0)
            } else {
                base
            }
        });
        let mut h = &a + &a.adjoint();
        h.hermitize();
        let e = eigh(&h).unwrap();
        assert!(residual(&h, &e) < 1e-12);
        let vhv = &e.vectors.adjoint() * &e.vectors;
        assert!((&vhv - &CMatrix::identity(4)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_row_major(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(eigh(&a).is_err());
    }
}
