//! Determined separation with a rank-1 spatial model: ILRMA and its
//! sparsity-regularized variant.
//!
//! One iteration runs, in order: activation update, basis update, the
//! iterative-projection update of every demixing row, and (only when the
//! prior is switched off) the joint scale normalization of `lambda_n` and
//! demixing row `n`. The sparse penalties are not scale invariant, so with
//! the prior active the normalization would raise the cost and is skipped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{cubic_positive_root, CMatrix, Lu, LOADING};
use crate::separation::{normalize_input, SeparationResult, SpatialEstimate};
use crate::signal::Spectrogram;
use crate::source::{init_factors, prior_penalty, Matrix, SourceFactors, SparsePrior, FLOOR};

/// Basis update rule for the sparse variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRule {
    /// `w = (sqrt(S^2 + 8 w' sum_t |y| h / lambda) - S) / 4` with `S = sum_t h`.
    ClosedForm,
    /// Positive root of `2 g w^3 + (sum_t h / lambda) w^2 - w'^2 sum_t |y|^2 h / lambda^2 = 0`,
    /// the stationary point of the majorizer. Keeps the cost monotone.
    DerivedCubic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlrmaConfig {
    pub iterations: usize,
    /// Bases per source.
    pub bases: usize,
    /// Laplace weight on activations. Ignored by the plain variant.
    pub mu: f64,
    /// Bingham offset; only shifts the cost. Ignored by the plain variant.
    pub rho: f64,
    /// `false` runs plain ILRMA (no prior at all).
    pub sparse: bool,
    pub basis_rule: BasisRule,
    /// Scale of the Bingham term, normally 0 or 1. Ignored by the plain variant.
    pub bingham_weight: f64,
    pub seed: u64,
    /// Record the cost after every iteration.
    pub trace_cost: bool,
    /// Channel the separated sources are projected back onto.
    pub reference_channel: usize,
    /// Expected source count; must equal the channel count when given.
    pub sources: Option<usize>,
}

impl IlrmaConfig {
    pub fn plain() -> Self {
        Self {
            iterations: 100,
            bases: 10,
            mu: 0.0,
            rho: 0.0,
            sparse: false,
            basis_rule: BasisRule::DerivedCubic,
            bingham_weight: 0.0,
            seed: 0,
            trace_cost: true,
            reference_channel: 0,
            sources: None,
        }
    }

    /// s-ILRMA with `mu = 0.05`, `rho = 10` and the Bingham term on.
    pub fn sparse() -> Self {
        Self {
            mu: 0.05,
            rho: 10.0,
            sparse: true,
            bingham_weight: 1.0,
            ..Self::plain()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if self.bases == 0 {
            return Err(Error::InvalidInput("bases per source must be at least 1".into()));
        }
        if !(self.mu >= 0.0) || !(self.rho >= 0.0) || !(self.bingham_weight >= 0.0) {
            return Err(Error::InvalidInput("mu, rho and the Bingham weight must be nonnegative".into()));
        }
        Ok(())
    }

    /// The prior actually used by the updates.
    pub fn prior(&self, sources: usize, bins: usize) -> Result<SparsePrior> {
        let ks = vec![self.bases; sources];
        if self.sparse {
            SparsePrior::uniform(&ks, bins, self.mu, self.rho, self.bingham_weight)
        } else {
            SparsePrior::uniform(&ks, bins, 0.0, 0.0, 0.0)
        }
    }
}

/// Per-bin `N x M` demixing matrices, `y_ft = D_f x_ft`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingSet {
    pub matrices: Vec<CMatrix>,
}

impl DemixingSet {
    pub fn identity(bins: usize, dim: usize) -> Self {
        Self {
            matrices: vec![CMatrix::identity(dim); bins],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.matrices
            .iter()
            .all(|d| d.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// `y_ft = D_f x_ft` for every bin and frame; channel `n` of the result is source `n`.
pub fn demix(x: &Spectrogram, demixing: &DemixingSet) -> Spectrogram {
    let mut y = Spectrogram::zeros_like(x, x.channels());
    for f in 0..x.bins() {
        let d = &demixing.matrices[f];
        for t in 0..x.frames() {
            let out = d.mul_vec(x.frame_vec(f, t));
            y.frame_vec_mut(f, t).copy_from_slice(&out);
        }
    }
    y
}

/// `|y_nft|^2` as one `F x T` matrix per source.
pub fn power_matrices(y: &Spectrogram) -> Vec<Matrix> {
    (0..y.channels())
        .map(|n| Matrix::from_fn(y.bins(), y.frames(), |f, t| y.get(f, t, n).norm_sqr()))
        .collect()
}

/// Multiplicative activation update with the Laplace weight `mu` in the denominator:
/// `h <- h sqrt( sum_f w |y|^2 / lambda^2 / (sum_f w / lambda + mu) )`.
pub fn update_activations(h: &mut Matrix, w: &Matrix, power: &Matrix, lambda: &Matrix, mu: &[f64]) {
    let (bins, frames) = (power.rows(), power.cols());
    let ratio = Matrix::from_fn(bins, frames, |f, t| power[(f, t)] / (lambda[(f, t)] * lambda[(f, t)]));
    let inv = Matrix::from_fn(bins, frames, |f, t| 1.0 / lambda[(f, t)]);
    let num = w.t_matmul(&ratio);
    let den = w.t_matmul(&inv);
    for k in 0..h.rows() {
        for t in 0..frames {
            let v = h[(k, t)] * (num[(k, t)] / (den[(k, t)] + mu[k])).sqrt();
            h[(k, t)] = v.max(FLOOR);
        }
    }
}

/// Basis update; see [`BasisRule`].
pub fn update_bases(
    w: &mut Matrix,
    h: &Matrix,
    power: &Matrix,
    lambda: &Matrix,
    rule: BasisRule,
    bingham_weight: f64,
) -> Result<()> {
    let (bins, frames) = (power.rows(), power.cols());
    match rule {
        BasisRule::DerivedCubic => {
            let ratio = Matrix::from_fn(bins, frames, |f, t| power[(f, t)] / (lambda[(f, t)] * lambda[(f, t)]));
            let inv = Matrix::from_fn(bins, frames, |f, t| 1.0 / lambda[(f, t)]);
            let num = ratio.matmul_t(h);
            let den = inv.matmul_t(h);
            for f in 0..bins {
                for k in 0..w.cols() {
                    let prev = w[(f, k)];
                    let v = if bingham_weight == 0.0 {
                        prev * (num[(f, k)] / den[(f, k)]).sqrt()
                    } else {
                        cubic_positive_root(2.0 * bingham_weight, den[(f, k)], -prev * prev * num[(f, k)])?
                    };
                    w[(f, k)] = v.max(FLOOR);
                }
            }
        }
        BasisRule::ClosedForm => {
            let mag = Matrix::from_fn(bins, frames, |f, t| power[(f, t)].sqrt() / lambda[(f, t)]);
            let weighted = mag.matmul_t(h);
            for f in 0..bins {
                for k in 0..w.cols() {
                    let s: f64 = h.row(k).iter().sum();
                    let prev = w[(f, k)];
                    let v = ((s * s + 8.0 * prev * weighted[(f, k)]).sqrt() - s) / 4.0;
                    w[(f, k)] = v.max(FLOOR);
                }
            }
        }
    }
    Ok(())
}

/// `(1/T) sum_t x_t x_t^H / weight_t` from `T x M` row-major frames.
pub fn weighted_covariance(frames: &[Complex64], weights: &[f64], channels: usize) -> CMatrix {
    let t_len = weights.len();
    let mut v = CMatrix::zeros(channels);
    for (t, &wt) in weights.iter().enumerate() {
        let xt = &frames[t * channels..(t + 1) * channels];
        let s = 1.0 / wt;
        for i in 0..channels {
            let xi = xt[i] * s;
            for j in i..channels {
                v[(i, j)] += xi * xt[j].conj();
            }
        }
    }
    for i in 0..channels {
        for j in i..channels {
            let z = v[(i, j)] / t_len as f64;
            v[(i, j)] = z;
            v[(j, i)] = z.conj();
        }
        v[(i, i)].im = 0.0;
    }
    v
}

/// Iterative-projection update of every row of one bin's demixing matrix.
///
/// `frames` holds the bin's `T x M` observations and `lambdas[n]` the `T`
/// source variances. For each source: `V = (1/T) sum_t x x^H / lambda_nt`,
/// `d = (D V)^{-1} e_n`, `d <- d / sqrt(d^H V d)`, and row `n` becomes `d^H`.
pub fn update_demixing(d: &mut CMatrix, frames: &[Complex64], lambdas: &[&[f64]]) -> Result<()> {
    let m = d.dim();
    if lambdas.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: lambdas.len(),
        });
    }
    for (n, lam) in lambdas.iter().enumerate() {
        let v = weighted_covariance(frames, lam, m);
        let dn = solve_row(d, &v, n).or_else(|_| {
            let mut loaded = v.clone();
            loaded.add_diag(LOADING * v.real_trace().max(f64::MIN_POSITIVE) / m as f64);
            solve_row(d, &loaded, n)
        })?;
        let row = d.row_mut(n);
        for (r, z) in row.iter_mut().zip(&dn) {
            *r = z.conj();
        }
    }
    Ok(())
}

fn solve_row(d: &CMatrix, v: &CMatrix, n: usize) -> Result<Vec<Complex64>> {
    let dv = d * v;
    let mut e = vec![Complex64::new(0.0, 0.0); d.dim()];
    e[n] = Complex64::new(1.0, 0.0);
    let mut dn = Lu::new(&dv)?.solve(&e);
    let q = v.quad_form(&dn);
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Singular);
    }
    let s = 1.0 / q.sqrt();
    dn.iter_mut().for_each(|z| *z *= s);
    Ok(dn)
}

/// Projects separated sources onto `reference` with `[D_f^{-1}]_{ref,n}`.
///
/// Summing the projected sources recovers the reference channel of the mixture.
pub fn back_project(y: &Spectrogram, demixing: &DemixingSet, reference: usize) -> Result<Spectrogram> {
    if reference >= y.channels() {
        return Err(Error::InvalidInput(format!(
            "reference channel {reference} out of range for {} channels",
            y.channels()
        )));
    }
    let mut out = Spectrogram::zeros_like(y, y.channels());
    for f in 0..y.bins() {
        let inv = Lu::new(&demixing.matrices[f])?.inverse();
        let gains = inv.row(reference);
        for t in 0..y.frames() {
            let src = y.frame_vec(f, t);
            let dst = out.frame_vec_mut(f, t);
            for n in 0..src.len() {
                dst[n] = gains[n] * src[n];
            }
        }
    }
    Ok(out)
}

/// `sum (|y|^2 / lambda + ln lambda) - 2T sum_f ln|det D_f| + prior penalty`.
///
/// Constant terms of the negative log-likelihood are dropped; the `-sum rho`
/// offset of the Bingham normalizer is kept.
pub fn cost(x: &Spectrogram, demixing: &DemixingSet, factors: &SourceFactors, prior: &SparsePrior) -> Result<f64> {
    let y = demix(x, demixing);
    let power = power_matrices(&y);
    cost_from_parts(&power, demixing, factors, prior)
}

fn cost_from_parts(power: &[Matrix], demixing: &DemixingSet, factors: &SourceFactors, prior: &SparsePrior) -> Result<f64> {
    let frames = factors.frames();
    let mut total = 0.0;
    for (n, p) in power.iter().enumerate() {
        let lam = factors.lambda_matrix(n);
        total += p
            .as_slice()
            .iter()
            .zip(lam.as_slice())
            .map(|(p, l)| p / l + l.ln())
            .sum::<f64>();
    }
    for d in &demixing.matrices {
        total -= 2.0 * frames as f64 * Lu::new(d)?.log_abs_det();
    }
    Ok(total + prior_penalty(factors, prior)?)
}

fn prior_inactive(prior: &SparsePrior) -> bool {
    prior.bingham_weight == 0.0 && prior.mu.iter().flatten().all(|&m| m == 0.0)
}

/// Mutable separation state for step-by-step driving and inspection.
#[derive(Debug, Clone)]
pub struct IlrmaState {
    /// Power-normalized observation.
    pub x: Spectrogram,
    pub demixing: DemixingSet,
    pub factors: SourceFactors,
    pub prior: SparsePrior,
    pub basis_rule: BasisRule,
}

impl IlrmaState {
    pub fn new(x: Spectrogram, cfg: &IlrmaConfig) -> Result<Self> {
        cfg.validate()?;
        let m = x.channels();
        if let Some(n) = cfg.sources {
            if n != m {
                return Err(Error::UnsupportedConfig(format!(
                    "ILRMA needs as many sources as channels ({n} sources, {m} channels)"
                )));
            }
        }
        if x.frames() < 2 {
            return Err(Error::InvalidInput("ILRMA needs at least two frames".into()));
        }
        if cfg.reference_channel >= m {
            return Err(Error::InvalidInput(format!(
                "reference channel {} out of range for {m} channels",
                cfg.reference_channel
            )));
        }
        let factors = init_factors(x.bins(), x.frames(), &vec![cfg.bases; m], cfg.seed)?;
        let prior = cfg.prior(m, x.bins())?;
        Ok(Self {
            demixing: DemixingSet::identity(x.bins(), m),
            x,
            factors,
            prior,
            basis_rule: cfg.basis_rule,
        })
    }

    pub fn cost(&self) -> Result<f64> {
        cost(&self.x, &self.demixing, &self.factors, &self.prior)
    }

    /// One full sweep of the updates.
    pub fn step(&mut self) -> Result<()> {
        let sources = self.factors.sources();
        let power = power_matrices(&demix(&self.x, &self.demixing));

        for n in 0..sources {
            let lam = self.factors.lambda_matrix(n);
            let (w, h) = (&self.factors.bases[n], &mut self.factors.activations[n]);
            update_activations(h, w, &power[n], &lam, &self.prior.mu[n]);
        }
        for n in 0..sources {
            let lam = self.factors.lambda_matrix(n);
            let (w, h) = (&mut self.factors.bases[n], &self.factors.activations[n]);
            update_bases(w, h, &power[n], &lam, self.basis_rule, self.prior.bingham_weight)?;
        }

        let lambdas: Vec<Matrix> = (0..sources).map(|n| self.factors.lambda_matrix(n)).collect();
        for f in 0..self.x.bins() {
            let rows: Vec<&[f64]> = lambdas.iter().map(|l| l.row(f)).collect();
            update_demixing(&mut self.demixing.matrices[f], self.x.bin(f), &rows)?;
        }

        if prior_inactive(&self.prior) {
            self.normalize_scale(&lambdas);
        }
        Ok(())
    }

    /// Rescales `lambda_n` to unit mean and demixing row `n` by `1/sqrt(mean)`,
    /// which leaves the unregularized cost unchanged.
    fn normalize_scale(&mut self, lambdas: &[Matrix]) {
        for (n, lam) in lambdas.iter().enumerate() {
            let mean = lam.sum() / lam.as_slice().len() as f64;
            if !(mean > 0.0) || !mean.is_finite() {
                continue;
            }
            self.factors.bases[n].scale_mut(1.0 / mean);
            self.factors.bases[n].clamp_min(FLOOR);
            let s = 1.0 / mean.sqrt();
            for d in &mut self.demixing.matrices {
                d.row_mut(n).iter_mut().for_each(|z| *z *= s);
            }
        }
    }

    fn finite(&self) -> bool {
        self.factors.all_finite() && self.demixing.all_finite()
    }
}

/// Runs ILRMA (or s-ILRMA when `cfg.sparse`) on a determined mixture.
///
/// The input is scaled to unit mean power first; estimates are scaled back.
pub fn run_ilrma(x: &Spectrogram, cfg: &IlrmaConfig) -> Result<SeparationResult> {
    let (xn, scale) = normalize_input(x)?;
    let mut state = IlrmaState::new(xn, cfg)?;
    let mut trace = Vec::new();
    if cfg.trace_cost {
        trace.push(state.cost()?);
    }
    for it in 1..=cfg.iterations {
        state.step().map_err(|e| match e {
            Error::Singular => Error::Diverged { iteration: it },
            other => other,
        })?;
        if !state.finite() {
            return Err(Error::Diverged { iteration: it });
        }
        if cfg.trace_cost {
            let c = state.cost()?;
            if !c.is_finite() {
                return Err(Error::Diverged { iteration: it });
            }
            trace.push(c);
        }
    }
    let y = demix(&state.x, &state.demixing);
    let mut sources = back_project(&y, &state.demixing, cfg.reference_channel)?;
    sources.scale_mut(scale);
    Ok(SeparationResult {
        sources,
        cost_trace: trace,
        factors: state.factors,
        spatial: SpatialEstimate::Demixing(state.demixing),
        input_scale: scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_spectrogram(bins: usize, frames: usize, m: usize, seed: u64) -> Spectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrogram::zeros(2 * (bins - 1), bins - 1, frames, m, 0).unwrap();
        for z in s.as_mut_slice() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        s
    }

    #[test]
    fn activation_fixed_point() {
        let w = Matrix::from_fn(3, 2, |f, k| 0.5 + (f + k) as f64 * 0.1);
        let mut h = Matrix::from_fn(2, 4, |k, t| 0.3 + (k * t) as f64 * 0.2);
        let lam = w.matmul(&h);
        let before = h.clone();
        update_activations(&mut h, &w, &lam, &lam, &[0.0, 0.0]);
        for (a, b) in h.as_slice().iter().zip(before.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn activation_large_mu_kills_h() {
        let w = Matrix::filled(3, 1, 1.0);
        let mut h = Matrix::filled(1, 2, 1.0);
        let lam = w.matmul(&h);
        update_activations(&mut h, &w, &lam, &lam, &[1e30]);
        assert!(h.as_slice().iter().all(|&v| v <= FLOOR));
    }

    #[test]
    fn activation_scalar_hand_value() {
        // F = 1: w = 1, h' = 2, |y|^2 = 4, lambda = 2, mu = 0  =>  h = 2 sqrt((4/4)/(1/2)) = 2 sqrt(2)
        let w = Matrix::filled(1, 1, 1.0);
        let mut h = Matrix::filled(1, 1, 2.0);
        update_activations(&mut h, &w, &Matrix::filled(1, 1, 4.0), &Matrix::filled(1, 1, 2.0), &[0.0]);
        assert!((h[(0, 0)] - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_rule_hand_value() {
        // sum_t h = 2, w' = 1, sum_t (|y|/lambda) h = 1.5  =>  (sqrt(4 + 12) - 2) / 4 = 0.5
        let h = Matrix::filled(1, 2, 1.0);
        let mut w = Matrix::filled(1, 1, 1.0);
        // |y| / lambda = 0.75 per frame
        let power = Matrix::filled(1, 2, 0.75f64.powi(2));
        let lam = Matrix::filled(1, 2, 1.0);
        update_bases(&mut w, &h, &power, &lam, BasisRule::ClosedForm, 1.0).unwrap();
        assert!((w[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn silent_source_sends_bases_to_floor() {
        for rule in [BasisRule::ClosedForm, BasisRule::DerivedCubic] {
            let h = Matrix::filled(2, 3, 0.7);
            let mut w = Matrix::filled(4, 2, 0.9);
            let lam = Matrix::filled(4, 3, 1.0);
            update_bases(&mut w, &h, &Matrix::zeros(4, 3), &lam, rule, 1.0).unwrap();
            assert!(w.as_slice().iter().all(|&v| v == FLOOR), "{rule:?}");
        }
    }

    #[test]
    fn cubic_rule_root_residual() {
        let h = Matrix::from_fn(2, 3, |k, t| 0.2 + 0.3 * (k + t) as f64);
        let w0 = Matrix::from_fn(4, 2, |f, k| 0.4 + 0.1 * (f * k) as f64);
        let power = Matrix::from_fn(4, 3, |f, t| 0.5 + 0.25 * (f + 2 * t) as f64);
        let lam = w0.matmul(&h);
        let mut w = w0.clone();
        update_bases(&mut w, &h, &power, &lam, BasisRule::DerivedCubic, 1.0).unwrap();
        for f in 0..4 {
            for k in 0..2 {
                let b: f64 = (0..3).map(|t| h[(k, t)] / lam[(f, t)]).sum();
                let a: f64 = w0[(f, k)].powi(2)
                    * (0..3).map(|t| h[(k, t)] * power[(f, t)] / lam[(f, t)].powi(2)).sum::<f64>();
                let v = w[(f, k)];
                assert!((2.0 * v.powi(3) + b * v * v - a).abs() < 1e-9 * a.max(2.0));
            }
        }
    }

    #[test]
    fn demixing_fixed_point_on_white_data() {
        // x_t cycles through +-e_1, +-e_2 so that (1/T) sum x x^H = I exactly.
        let frames: Vec<Complex64> = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
            .iter()
            .flat_map(|v| v.iter().map(|&r| c(r, 0.0)))
            .collect();
        let mut v = weighted_covariance(&frames, &[1.0; 4], 2);
        v.scale_mut(2.0);
        assert!((&v - &CMatrix::identity(2)).frobenius_norm() < 1e-15);
        let half = [0.5; 4];
        let mut d = CMatrix::identity(2);
        update_demixing(&mut d, &frames, &[&half, &half]).unwrap();
        assert!((&d - &CMatrix::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn demixing_normalization_holds() {
        let x = random_spectrogram(5, 12, 2, 9);
        let lam: Vec<Vec<f64>> = (0..2).map(|n| (0..12).map(|t| 0.5 + 0.1 * (t + n) as f64).collect()).collect();
        let mut d = CMatrix::from_row_major(vec![c(1.0, 0.2), c(0.3, 0.0), c(-0.4, 0.1), c(0.9, -0.3)]).unwrap();
        update_demixing(&mut d, x.bin(2), &[&lam[0], &lam[1]]).unwrap();
        for n in 0..2 {
            let v = weighted_covariance(x.bin(2), &lam[n], 2);
            let dn: Vec<Complex64> = d.row(n).iter().map(|z| z.conj()).collect();
            assert!((v.quad_form(&dn) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn single_frame_covariance_is_outer_product() {
        let frame = [c(1.0, 2.0), c(-0.5, 0.5)];
        let v = weighted_covariance(&frame, &[2.0], 2);
        let o = CMatrix::outer(&frame).scale(0.5);
        assert!((&v - &o).frobenius_norm() < 1e-15);
    }

    #[test]
    fn back_projection_properties() {
        let x = random_spectrogram(4, 6, 2, 3);
        let id = DemixingSet::identity(4, 2);
        let y = demix(&x, &id);
        assert_eq!(back_project(&y, &id, 0).unwrap().channel(0), x.channel(0));

        let d = CMatrix::from_row_major(vec![c(1.0, 0.5), c(0.2, 0.0), c(-0.3, 0.4), c(0.8, 0.0)]).unwrap();
        let set = DemixingSet { matrices: vec![d.clone(); 4] };
        let scaled = DemixingSet { matrices: vec![d.scale(3.0); 4] };
        let p1 = back_project(&demix(&x, &set), &set, 1).unwrap();
        let p2 = back_project(&demix(&x, &scaled), &scaled, 1).unwrap();
        for (a, b) in p1.as_slice().iter().zip(p2.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        for f in 0..4 {
            for t in 0..6 {
                let sum: Complex64 = p1.frame_vec(f, t).iter().sum();
                assert!((sum - x.get(f, t, 1)).norm() < 1e-8);
            }
        }
        assert!(back_project(&y, &id, 2).is_err());
    }

    #[test]
    fn cost_plug_in_value() {
        // lambda == |y|^2 and no penalty => sum (1 + ln |y|^2) - 2T sum_f ln|det D|
        let x = random_spectrogram(3, 4, 2, 5);
        let d = CMatrix::from_row_major(vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        let set = DemixingSet { matrices: vec![d; 3] };
        let power = power_matrices(&demix(&x, &set));
        // rank-1 factors with K = F*T would be awkward; use one basis per bin-frame via K = T.
        let bases: Vec<Matrix> = power.iter().map(|p| p.clone()).collect();
        let acts: Vec<Matrix> = (0..2).map(|_| Matrix::from_fn(4, 4, |k, t| if k == t { 1.0 } else { 0.0 })).collect();
        let factors = SourceFactors::new(bases, acts).unwrap();
        let prior = SparsePrior::uniform(&[4, 4], 3, 0.0, 0.0, 0.0).unwrap();
        let got = cost(&x, &set, &factors, &prior).unwrap();
        let mut expected = 0.0;
        for p in &power {
            expected += p.as_slice().iter().map(|v| 1.0 + v.ln()).sum::<f64>();
        }
        expected -= 2.0 * 4.0 * 3.0 * 2f64.ln();
        assert!((got - expected).abs() < 1e-10 * expected.abs().max(1.0));
    }

    #[test]
    fn doubling_mu_adds_l1_mass() {
        let x = random_spectrogram(4, 5, 2, 8);
        let set = DemixingSet::identity(4, 2);
        let factors = init_factors(4, 5, &[3, 3], 1).unwrap();
        let p1 = SparsePrior::uniform(&[3, 3], 4, 0.05, 10.0, 1.0).unwrap();
        let p2 = SparsePrior::uniform(&[3, 3], 4, 0.10, 10.0, 1.0).unwrap();
        let l1: f64 = factors.activations.iter().map(Matrix::sum).sum();
        let c1 = cost(&x, &set, &factors, &p1).unwrap();
        let c2 = cost(&x, &set, &factors, &p2).unwrap();
        assert!((c2 - c1 - 0.05 * l1).abs() < 1e-10 * c1.abs().max(1.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = IlrmaConfig::sparse();
        cfg.iterations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = IlrmaConfig::plain();
        cfg.mu = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mismatched_source_count_rejected() {
        let x = random_spectrogram(5, 8, 2, 1);
        let cfg = IlrmaConfig {
            sources: Some(3),
            ..IlrmaConfig::plain()
        };
        assert!(matches!(run_ilrma(&x, &cfg), Err(Error::UnsupportedConfig(_))));
    }

    #[test]
    fn short_run_is_monotone_and_deterministic() {
        let x = random_spectrogram(9, 16, 2, 4);
        let cfg = IlrmaConfig {
            iterations: 15,
            bases: 3,
            seed: 7,
            ..IlrmaConfig::sparse()
        };
        let a = run_ilrma(&x, &cfg).unwrap();
        let b = run_ilrma(&x, &cfg).unwrap();
        assert_eq!(a.cost_trace, b.cost_trace);
        assert_eq!(a.cost_trace.len(), 16);
        for pair in a.cost_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-6 * pair[0].abs(), "{pair:?}");
        }
    }
}
