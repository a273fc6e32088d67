//! Low-rank nonnegative source model `lambda_nft = sum_k w_nfk h_nkt` and
//! its sparse priors.
//!
//! Each source owns a dedicated block of `K_n` bases. The prior is a Bingham
//! term on the basis columns (with the concentration vector fixed to ones it
//! contributes `sum_f w_nfk^2 - rho_nk`) and a Laplace term `mu_nk ||h_nk||_1`
//! on the activations.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Lower clamp for every factor entry and every `lambda`.
pub const FLOOR: f64 = 1e-12;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn clamp_min(&mut self, floor: f64) {
        for v in &mut self.data {
            if *v < floor {
                *v = floor;
            }
        }
    }

    pub fn scale_mut(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^T * rhs`.
    pub fn t_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "t_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let arow = &self.data[k * self.cols..(k + 1) * self.cols];
            let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
            for (i, &a) in arow.iter().enumerate() {
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * rhs^T`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols, "matmul_t shape mismatch");
        Matrix::from_fn(self.rows, rhs.rows, |i, j| {
            self.row(i).iter().zip(rhs.row(j)).map(|(a, b)| a * b).sum()
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Per-source basis (`F x K_n`) and activation (`K_n x T`) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFactors {
    pub bases: Vec<Matrix>,
    pub activations: Vec<Matrix>,
}

impl SourceFactors {
    pub fn new(bases: Vec<Matrix>, activations: Vec<Matrix>) -> Result<Self> {
        if bases.len() != activations.len() || bases.is_empty() {
            return Err(Error::InvalidInput("need one basis and one activation matrix per source".into()));
        }
        let bins = bases[0].rows();
        let frames = activations[0].cols();
        for (w, h) in bases.iter().zip(&activations) {
            if w.rows() != bins || h.cols() != frames || w.cols() != h.rows() {
                return Err(Error::InvalidInput("inconsistent factor shapes".into()));
            }
        }
        Ok(Self { bases, activations })
    }

    pub fn sources(&self) -> usize {
        self.bases.len()
    }

    pub fn bins(&self) -> usize {
        self.bases[0].rows()
    }

    pub fn frames(&self) -> usize {
        self.activations[0].cols()
    }

    pub fn bases_per_source(&self) -> Vec<usize> {
        self.bases.iter().map(Matrix::cols).collect()
    }

    /// `lambda_nft`, floored.
    pub fn lambda(&self, n: usize, f: usize, t: usize) -> f64 {
        let w = &self.bases[n];
        let h = &self.activations[n];
        let v: f64 = (0..w.cols()).map(|k| w[(f, k)] * h[(k, t)]).sum();
        v.max(FLOOR)
    }

    /// The full `F x T` model spectrogram of source `n`, floored.
    pub fn lambda_matrix(&self, n: usize) -> Matrix {
        let mut l = self.bases[n].matmul(&self.activations[n]);
        l.clamp_min(FLOOR);
        l
    }

    pub fn clamp_floor(&mut self) {
        for m in self.bases.iter_mut().chain(self.activations.iter_mut()) {
            m.clamp_min(FLOOR);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.bases.iter().chain(&self.activations).all(Matrix::all_finite)
    }
}

/// Bingham/Laplace hyperparameters.
///
/// `bingham_weight` scales the whole Bingham term (1 for the sparse
/// variants, 0 to switch it off). The Bingham concentration vector is fixed
/// to all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePrior {
    pub rho: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub bingham_weight: f64,
    theta: Vec<f64>,
}

impl SparsePrior {
    pub fn new(rho: Vec<Vec<f64>>, mu: Vec<Vec<f64>>, bingham_weight: f64, bins: usize) -> Result<Self> {
        if rho.len() != mu.len() || rho.iter().zip(&mu).any(|(r, m)| r.len() != m.len()) {
            return Err(Error::InvalidInput("rho and mu shapes differ".into()));
        }
        if rho.iter().chain(&mu).flatten().any(|v| !(*v >= 0.0)) || !(bingham_weight >= 0.0) {
            return Err(Error::InvalidInput("prior parameters must be nonnegative".into()));
        }
        Ok(Self {
            rho,
            mu,
            bingham_weight,
            theta: vec![1.0; bins],
        })
    }

    /// Same `mu` and `rho` for every basis of every source.
    pub fn uniform(bases_per_source: &[usize], bins: usize, mu: f64, rho: f64, bingham_weight: f64) -> Result<Self> {
        let rho_v = bases_per_source.iter().map(|&k| vec![rho; k]).collect();
        let mu_v = bases_per_source.iter().map(|&k| vec![mu; k]).collect();
        Self::new(rho_v, mu_v, bingham_weight, bins)
    }

    /// Concentration vector of the Bingham prior (all ones).
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn rho_total(&self) -> f64 {
        self.rho.iter().flatten().sum()
    }

    fn check_shape(&self, factors: &SourceFactors) -> Result<()> {
        let ks = factors.bases_per_source();
        if self.mu.len() != ks.len() || self.mu.iter().zip(&ks).any(|(m, &k)| m.len() != k) {
            return Err(Error::InvalidInput("prior shape does not match the factors".into()));
        }
        if self.theta.len() != factors.bins() {
            return Err(Error::DimensionMismatch {
                expected: factors.bins(),
                found: self.theta.len(),
            });
        }
        Ok(())
    }
}

/// `sum mu_nk ||h_nk||_1 + gamma sum theta_f w_nfk^2 - sum rho_nk`.
pub fn prior_penalty(factors: &SourceFactors, prior: &SparsePrior) -> Result<f64> {
    prior.check_shape(factors)?;
    let mut total = 0.0;
    for n in 0..factors.sources() {
        let h = &factors.activations[n];
        for (k, mu) in prior.mu[n].iter().enumerate() {
            if *mu != 0.0 {
                total += mu * h.row(k).iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        if prior.bingham_weight != 0.0 {
            let w = &factors.bases[n];
            let sq: f64 = (0..w.rows())
                .map(|f| prior.theta[f] * w.row(f).iter().map(|v| v * v).sum::<f64>())
                .sum();
            total += prior.bingham_weight * sq;
        }
    }
    Ok(total - prior.rho_total())
}

/// Fraction of entries at or below `1e-6 * max(H)`.
pub fn sparsity_fraction(h: &Matrix) -> f64 {
    let n = h.as_slice().len();
    if n == 0 {
        return 1.0;
    }
    let thresh = 1e-6 * h.max().max(0.0);
    h.as_slice().iter().filter(|&&v| v <= thresh).count() as f64 / n as f64
}

/// Seeded uniform `(0.1, 1.0)` initialization of all factors.
pub fn init_factors(bins: usize, frames: usize, bases_per_source: &[usize], seed: u64) -> Result<SourceFactors> {
    if bins == 0 || frames == 0 || bases_per_source.is_empty() || bases_per_source.contains(&0) {
        return Err(Error::InvalidInput("factor dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| Matrix::from_fn(rows, cols, |_, _| rng.random_range(0.1..1.0));
    let mut bases = Vec::with_capacity(bases_per_source.len());
    let mut activations = Vec::with_capacity(bases_per_source.len());
    for &k in bases_per_source {
        bases.push(draw(bins, k));
        activations.push(draw(k, frames));
    }
    SourceFactors::new(bases, activations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(bins: usize, frames: usize, k: usize, sources: usize) -> SourceFactors {
        SourceFactors::new(
            vec![Matrix::filled(bins, k, 1.0); sources],
            vec![Matrix::filled(k, frames, 1.0); sources],
        )
        .unwrap()
    }

    #[test]
    fn lambda_sum_of_ones() {
        let f = ones(3, 4, 5, 1);
        assert_eq!(f.lambda(0, 2, 3), 5.0);
        assert!(f.lambda_matrix(0).as_slice().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn lambda_floor() {
        let mut f = ones(3, 4, 5, 1);
        f.activations[0] = Matrix::zeros(5, 4);
        assert_eq!(f.lambda(0, 0, 0), FLOOR);
        assert_eq!(f.lambda_matrix(0)[(1, 1)], FLOOR);
    }

    #[test]
    fn lambda_matches_triple_loop() {
        let f = init_factors(7, 6, &[3, 4], 11).unwrap();
        for n in 0..2 {
            let lm = f.lambda_matrix(n);
            for fi in 0..7 {
                for t in 0..6 {
                    let mut acc = 0.0;
                    for k in 0..f.bases[n].cols() {
                        acc += f.bases[n][(fi, k)] * f.activations[n][(k, t)];
                    }
                    assert!((lm[(fi, t)] - acc).abs() < 1e-12);
                    assert!((f.lambda(n, fi, t) - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn penalty_only_rho_survives() {
        let f = SourceFactors::new(vec![Matrix::zeros(4, 2); 2], vec![Matrix::zeros(2, 5); 2]).unwrap();
        let p = SparsePrior::uniform(&[2, 2], 4, 0.05, 10.0, 1.0).unwrap();
        assert_eq!(prior_penalty(&f, &p).unwrap(), -40.0);
    }

    #[test]
    fn penalty_square_term() {
        let mut w = Matrix::zeros(4, 2);
        w[(1, 1)] = 3.0;
        let f = SourceFactors::new(vec![w], vec![Matrix::filled(2, 5, 7.0)]).unwrap();
        let p = SparsePrior::uniform(&[2], 4, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(prior_penalty(&f, &p).unwrap(), 9.0);
    }

    #[test]
    fn penalty_matches_elementwise_loop() {
        let f = init_factors(5, 6, &[3, 2], 3).unwrap();
        let mu = vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.5]];
        let rho = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0]];
        let p = SparsePrior::new(rho.clone(), mu.clone(), 1.0, 5).unwrap();
        let mut expected = 0.0;
        for n in 0..2 {
            for k in 0..f.bases[n].cols() {
                for t in 0..6 {
                    expected += mu[n][k] * f.activations[n][(k, t)].abs();
                }
                for fi in 0..5 {
                    expected += f.bases[n][(fi, k)].powi(2);
                }
                expected -= rho[n][k];
            }
        }
        assert!((prior_penalty(&f, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bingham_term_is_column_norm() {
        let f = init_factors(9, 2, &[4], 5).unwrap();
        let p = SparsePrior::uniform(&[4], 9, 0.0, 0.0, 1.0).unwrap();
        let norms: f64 = (0..4)
            .map(|k| {
                let col: f64 = (0..9).map(|fi| f.bases[0][(fi, k)].powi(2)).sum();
                col.sqrt().powi(2)
            })
            .sum();
        assert!((prior_penalty(&f, &p).unwrap() - norms).abs() < 1e-12);
        assert!(p.theta().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn penalty_shape_mismatch() {
        let f = init_factors(5, 6, &[3], 3).unwrap();
        let p = SparsePrior::uniform(&[2], 5, 0.1, 1.0, 1.0).unwrap();
        assert!(prior_penalty(&f, &p).is_err());
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_fraction(&Matrix::zeros(3, 4)), 1.0);
        assert_eq!(sparsity_fraction(&Matrix::filled(3, 4, 2.5)), 0.0);
        let half = Matrix::from_fn(2, 4, |i, _| if i == 0 { 0.0 } else { 1.0 });
        assert_eq!(sparsity_fraction(&half), 0.5);
    }

    #[test]
    fn init_is_seeded() {
        let a = init_factors(6, 5, &[2, 3], 42).unwrap();
        let b = init_factors(6, 5, &[2, 3], 42).unwrap();
        let c = init_factors(6, 5, &[2, 3], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for m in a.bases.iter().chain(&a.activations) {
            assert!(m.as_slice().iter().all(|&v| v > 0.1 && v < 1.0));
        }
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.5 - 1.0);
        let b = Matrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 - 0.25);
        let ab = a.matmul(&b);
        let at = Matrix::from_fn(4, 3, |i, j| a[(j, i)]);
        let bt = Matrix::from_fn(2, 4, |i, j| b[(j, i)]);
        assert_eq!(at.t_matmul(&b), ab);
        assert_eq!(a.matmul_t(&bt), ab);
    }
}
