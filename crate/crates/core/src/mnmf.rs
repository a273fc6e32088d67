//! Full-rank spatial covariance separation: MNMF and its sparsity-regularized
//! variant.
//!
//! The model covariance is `Rhat_ft = sum_n lambda_nft R_fn` and the observation
//! statistic is the outer product `x_ft x_ft^H`. One iteration updates H, then
//! W, then every SCM, recomputing `Rhat` between blocks. With the prior off,
//! SCMs are then rescaled to trace `M` and the scale moved into `W_n`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{cubic_positive_root, inv_psd, logdet_psd, riccati_solve, trace_prod, CMatrix};
use crate::separation::{normalize_input, SeparationResult, SpatialEstimate};
use crate::signal::Spectrogram;
use crate::source::{init_factors, prior_penalty, Matrix, SourceFactors, SparsePrior, FLOOR};

/// Offset mixed into the seed for the SCM initialization stream.
const SCM_SEED_SALT: u64 = 0x5CA1_AB1E;

#[derive(Debug, Clone, PartialEq)]
pub struct MnmfConfig {
    pub iterations: usize,
    pub bases: usize,
    pub mu: f64,
    pub rho: f64,
    pub sparse: bool,
    pub bingham_weight: f64,
    pub seed: u64,
    pub trace_cost: bool,
    pub reference_channel: usize,
    /// Number of sources; defaults to the channel count.
    pub sources: Option<usize>,
}

impl MnmfConfig {
    pub fn plain() -> Self {
        Self {
            iterations: 100,
            bases: 10,
            mu: 0.0,
            rho: 0.0,
            sparse: false,
            bingham_weight: 0.0,
            seed: 0,
            trace_cost: true,
            reference_channel: 0,
            sources: None,
        }
    }

    /// s-MNMF with `mu = 0.05`, `rho = 10` and the Bingham term on.
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

    pub fn prior(&self, sources: usize, bins: usize) -> Result<SparsePrior> {
        let ks = vec![self.bases; sources];
        if self.sparse {
            SparsePrior::uniform(&ks, bins, self.mu, self.rho, self.bingham_weight)
        } else {
            SparsePrior::uniform(&ks, bins, 0.0, 0.0, 0.0)
        }
    }
}

/// Spatial covariance matrices `R_fn`, stored bin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialModel {
    bins: usize,
    sources: usize,
    matrices: Vec<CMatrix>,
}

impl SpatialModel {
    pub fn new(bins: usize, sources: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() != bins * sources || matrices.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: bins * sources,
                found: matrices.len(),
            });
        }
        let dim = matrices[0].dim();
        if matrices.iter().any(|r| r.dim() != dim) {
            return Err(Error::InvalidInput("SCMs must share one size".into()));
        }
        Ok(Self {
            bins,
            sources,
            matrices,
        })
    }

    /// Identity plus `0.1` times a seeded random PSD matrix, scaled to trace `M`.
    pub fn random_init(bins: usize, sources: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SCM_SEED_SALT);
        let mut matrices = Vec::with_capacity(bins * sources);
        for _ in 0..bins * sources {
            let g = CMatrix::from_fn(dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let mut p = &g * &g.adjoint();
            p.scale_mut(1.0 / p.real_trace().max(f64::MIN_POSITIVE));
            let mut r = CMatrix::identity(dim);
            r.add_scaled(0.1, &p);
            r.hermitize();
            r.scale_mut(dim as f64 / r.real_trace());
            matrices.push(r);
        }
        Self {
            bins,
            sources,
            matrices,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn scm(&self, f: usize, n: usize) -> &CMatrix {
        &self.matrices[f * self.sources + n]
    }

    pub fn scm_mut(&mut self, f: usize, n: usize) -> &mut CMatrix {
        &mut self.matrices[f * self.sources + n]
    }

    pub fn all_finite(&self) -> bool {
        self.matrices
            .iter()
            .all(|r| r.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// `x_ft x_ft^H` for every bin and frame, indexed `f * T + t`.
pub fn empirical_covariance(x: &Spectrogram) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(x.bins() * x.frames());
    for f in 0..x.bins() {
        for t in 0..x.frames() {
            out.push(CMatrix::outer(x.frame_vec(f, t)));
        }
    }
    out
}

/// `Rhat_ft = sum_n lambda_nft R_fn`.
pub fn model_covariance(model: &SpatialModel, lambdas: &[Matrix], f: usize, t: usize) -> CMatrix {
    let mut r = CMatrix::zeros(model.dim());
    for (n, lam) in lambdas.iter().enumerate() {
        r.add_scaled(lam[(f, t)], model.scm(f, n));
    }
    r.hermitize();
    r
}

/// Quantities derived from `Rhat` at the current iterate.
#[derive(Debug, Clone)]
pub struct ModelStats {
    frames: usize,
    /// `Rhat_ft^{-1}`, indexed `f * T + t`.
    pub rhat_inv: Vec<CMatrix>,
    /// `Rhat_ft^{-1} x_ft`.
    pub whitened: Vec<Vec<Complex64>>,
    /// `Tr(R_fn Rhat_ft^{-1})`, one `F x T` matrix per source.
    pub a: Vec<Matrix>,
    /// `Tr(R_fn Rhat^{-1} x x^H Rhat^{-1}) = u^H R_fn u`, one `F x T` matrix per source.
    pub b: Vec<Matrix>,
}

impl ModelStats {
    pub fn compute(x: &Spectrogram, model: &SpatialModel, factors: &SourceFactors) -> Result<Self> {
        let (bins, frames, sources) = (x.bins(), x.frames(), factors.sources());
        let lambdas: Vec<Matrix> = (0..sources).map(|n| factors.lambda_matrix(n)).collect();
        let mut rhat_inv = Vec::with_capacity(bins * frames);
        let mut whitened = Vec::with_capacity(bins * frames);
        let mut a = vec![Matrix::zeros(bins, frames); sources];
        let mut b = vec![Matrix::zeros(bins, frames); sources];
        for f in 0..bins {
            for t in 0..frames {
                let inv = inv_psd(&model_covariance(model, &lambdas, f, t))?;
                let u = inv.mul_vec(x.frame_vec(f, t));
                for n in 0..sources {
                    let r = model.scm(f, n);
                    a[n][(f, t)] = trace_prod(r, &inv)?;
                    b[n][(f, t)] = r.quad_form(&u);
                }
                rhat_inv.push(inv);
                whitened.push(u);
            }
        }
        Ok(Self {
            frames,
            rhat_inv,
            whitened,
            a,
            b,
        })
    }

    #[inline]
    fn idx(&self, f: usize, t: usize) -> usize {
        f * self.frames + t
    }
}

/// `h <- h sqrt( sum_f w b / (sum_f w a + mu) )`.
pub fn update_activations(h: &mut Matrix, w: &Matrix, a: &Matrix, b: &Matrix, mu: &[f64]) {
    let num = w.t_matmul(b);
    let den = w.t_matmul(a);
    for k in 0..h.rows() {
        for t in 0..h.cols() {
            let v = h[(k, t)] * (num[(k, t)] / (den[(k, t)] + mu[k])).sqrt();
            h[(k, t)] = v.max(FLOOR);
        }
    }
}

/// Positive root of `2 g w^3 + (sum_t h a) w^2 - w'^2 sum_t h b = 0`; plain
/// multiplicative update when `g = 0`.
pub fn update_bases(w: &mut Matrix, h: &Matrix, a: &Matrix, b: &Matrix, bingham_weight: f64) -> Result<()> {
    let num = b.matmul_t(h);
    let den = a.matmul_t(h);
    for f in 0..w.rows() {
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
    Ok(())
}

/// Riccati update of every SCM from one set of statistics:
/// `R A R = R' (sum_t lambda u u^H) R'` with `A = sum_t lambda Rhat^{-1}`.
pub fn update_scm(model: &mut SpatialModel, factors: &SourceFactors, stats: &ModelStats) -> Result<()> {
    let m = model.dim();
    let frames = factors.frames();
    for n in 0..model.sources() {
        let lam = factors.lambda_matrix(n);
        for f in 0..model.bins() {
            let mut a = CMatrix::zeros(m);
            let mut q = CMatrix::zeros(m);
            for t in 0..frames {
                let i = stats.idx(f, t);
                let l = lam[(f, t)];
                a.add_scaled(l, &stats.rhat_inv[i]);
                q.add_scaled(l, &CMatrix::outer(&stats.whitened[i]));
            }
            a.hermitize();
            let prev = model.scm(f, n).clone();
            let mut rhs = &(&prev * &q) * &prev;
            rhs.hermitize();
            *model.scm_mut(f, n) = riccati_solve(&a, &rhs)?;
        }
    }
    Ok(())
}

/// Rescales each `R_fn` to trace `M` and multiplies row `f` of `W_n` by the
/// removed factor, leaving every `lambda_nft R_fn` unchanged up to flooring.
pub fn normalize_scm(model: &mut SpatialModel, factors: &mut SourceFactors) {
    let m = model.dim() as f64;
    for f in 0..model.bins() {
        for n in 0..model.sources() {
            let c = model.scm(f, n).real_trace() / m;
            if !(c > 0.0) || !c.is_finite() {
                continue;
            }
            model.scm_mut(f, n).scale_mut(1.0 / c);
            let w = &mut factors.bases[n];
            for k in 0..w.cols() {
                w[(f, k)] = (w[(f, k)] * c).max(FLOOR);
            }
        }
    }
}

/// Multichannel Wiener estimates `lambda R_fn Rhat^{-1} x` taken at `reference`;
/// channel `n` of the result is source `n`.
pub fn extract_sources_wiener(
    x: &Spectrogram,
    model: &SpatialModel,
    factors: &SourceFactors,
    reference: usize,
) -> Result<Spectrogram> {
    if reference >= x.channels() {
        return Err(Error::InvalidInput(format!(
            "reference channel {reference} out of range for {} channels",
            x.channels()
        )));
    }
    let sources = factors.sources();
    let lambdas: Vec<Matrix> = (0..sources).map(|n| factors.lambda_matrix(n)).collect();
    let mut out = Spectrogram::zeros_like(x, sources);
    for f in 0..x.bins() {
        for t in 0..x.frames() {
            let u = inv_psd(&model_covariance(model, &lambdas, f, t))?.mul_vec(x.frame_vec(f, t));
            for n in 0..sources {
                let row = model.scm(f, n).row(reference);
                let v: Complex64 = row.iter().zip(&u).map(|(r, z)| r * z).sum();
                out.set(f, t, n, v * lambdas[n][(f, t)]);
            }
        }
    }
    Ok(out)
}

/// `sum_ft [x^H Rhat^{-1} x + log det Rhat] + prior penalty`.
pub fn cost(x: &Spectrogram, model: &SpatialModel, factors: &SourceFactors, prior: &SparsePrior) -> Result<f64> {
    let lambdas: Vec<Matrix> = (0..factors.sources()).map(|n| factors.lambda_matrix(n)).collect();
    let mut total = 0.0;
    for f in 0..x.bins() {
        for t in 0..x.frames() {
            let rhat = model_covariance(model, &lambdas, f, t);
            total += inv_psd(&rhat)?.quad_form(x.frame_vec(f, t)) + logdet_psd(&rhat)?;
        }
    }
    Ok(total + prior_penalty(factors, prior)?)
}

/// Expansion point of the auxiliary function: per-(f,t) `Rhat'` and its
/// inverse, and per-(f,t,n) auxiliary matrices `Phi` with `sum_n Phi = I`.
#[derive(Debug, Clone)]
pub struct ExpansionPoint {
    frames: usize,
    sources: usize,
    rhat: Vec<CMatrix>,
    rhat_inv: Vec<CMatrix>,
    phi: Vec<CMatrix>,
}

impl ExpansionPoint {
    /// The point where the bound touches the cost:
    /// `Phi_n = lambda_n R_n Rhat^{-1}`, `Rhat' = Rhat`.
    pub fn tight(model: &SpatialModel, factors: &SourceFactors) -> Result<Self> {
        let (bins, frames, sources) = (factors.bins(), factors.frames(), factors.sources());
        let lambdas: Vec<Matrix> = (0..sources).map(|n| factors.lambda_matrix(n)).collect();
        let mut rhat = Vec::with_capacity(bins * frames);
        let mut rhat_inv = Vec::with_capacity(bins * frames);
        let mut phi = Vec::with_capacity(bins * frames * sources);
        for f in 0..bins {
            for t in 0..frames {
                let r = model_covariance(model, &lambdas, f, t);
                let inv = inv_psd(&r)?;
                for (n, lam) in lambdas.iter().enumerate() {
                    phi.push((model.scm(f, n) * &inv).scale(lam[(f, t)]));
                }
                rhat.push(r);
                rhat_inv.push(inv);
            }
        }
        Ok(Self {
            frames,
            sources,
            rhat,
            rhat_inv,
            phi,
        })
    }

    pub fn phi(&self, f: usize, t: usize, n: usize) -> &CMatrix {
        &self.phi[(f * self.frames + t) * self.sources + n]
    }
}

/// Majorizer of [`cost`] expanded at `point`, evaluated at `(model, factors)`:
///
/// `sum_ft [ sum_n Tr(Phi_n x x^H Phi_n^H (lambda_n R_n)^{-1})
///           + log det Rhat' + Tr(Rhat'^{-1} Rhat) - M ] + prior penalty`.
///
/// Every term is an upper bound of its counterpart in the cost, with
/// equality at [`ExpansionPoint::tight`].
pub fn auxiliary_cost(
    x: &Spectrogram,
    point: &ExpansionPoint,
    model: &SpatialModel,
    factors: &SourceFactors,
    prior: &SparsePrior,
) -> Result<f64> {
    let m = model.dim() as f64;
    let lambdas: Vec<Matrix> = (0..factors.sources()).map(|n| factors.lambda_matrix(n)).collect();
    let inv_scm: Vec<CMatrix> = (0..model.bins() * model.sources())
        .map(|i| inv_psd(&model.matrices[i]))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for f in 0..x.bins() {
        for t in 0..x.frames() {
            let i = f * point.frames + t;
            let xv = x.frame_vec(f, t);
            for (n, lam) in lambdas.iter().enumerate() {
                let v = point.phi(f, t, n).mul_vec(xv);
                total += inv_scm[f * model.sources() + n].quad_form(&v) / lam[(f, t)];
            }
            let rhat = model_covariance(model, &lambdas, f, t);
            total += logdet_psd(&point.rhat[i])? + trace_prod(&point.rhat_inv[i], &rhat)? - m;
        }
    }
    Ok(total + prior_penalty(factors, prior)?)
}

fn prior_inactive(prior: &SparsePrior) -> bool {
    prior.bingham_weight == 0.0 && prior.mu.iter().flatten().all(|&m| m == 0.0)
}

/// Mutable separation state for step-by-step driving and inspection.
#[derive(Debug, Clone)]
pub struct MnmfState {
    /// Power-normalized observation.
    pub x: Spectrogram,
    pub model: SpatialModel,
    pub factors: SourceFactors,
    pub prior: SparsePrior,
}

impl MnmfState {
    pub fn new(x: Spectrogram, cfg: &MnmfConfig) -> Result<Self> {
        cfg.validate()?;
        let m = x.channels();
        if m < 2 {
            return Err(Error::UnsupportedConfig("MNMF needs at least two channels".into()));
        }
        let n = cfg.sources.unwrap_or(m);
        if n == 0 || n > m {
            return Err(Error::UnsupportedConfig(format!(
                "MNMF supports 1 to {m} sources for {m} channels, got {n}"
            )));
        }
        if cfg.reference_channel >= m {
            return Err(Error::InvalidInput(format!(
                "reference channel {} out of range for {m} channels",
                cfg.reference_channel
            )));
        }
        let factors = init_factors(x.bins(), x.frames(), &vec![cfg.bases; n], cfg.seed)?;
        let model = SpatialModel::random_init(x.bins(), n, m, cfg.seed);
        let prior = cfg.prior(n, x.bins())?;
        Ok(Self {
            x,
            model,
            factors,
            prior,
        })
    }

    pub fn cost(&self) -> Result<f64> {
        cost(&self.x, &self.model, &self.factors, &self.prior)
    }

    pub fn stats(&self) -> Result<ModelStats> {
        ModelStats::compute(&self.x, &self.model, &self.factors)
    }

    pub fn step(&mut self) -> Result<()> {
        let sources = self.factors.sources();

        let stats = self.stats()?;
        for n in 0..sources {
            let (w, h) = (&self.factors.bases[n], &mut self.factors.activations[n]);
            update_activations(h, w, &stats.a[n], &stats.b[n], &self.prior.mu[n]);
        }

        let stats = self.stats()?;
        for n in 0..sources {
            let (w, h) = (&mut self.factors.bases[n], &self.factors.activations[n]);
            update_bases(w, h, &stats.a[n], &stats.b[n], self.prior.bingham_weight)?;
        }

        let stats = self.stats()?;
        update_scm(&mut self.model, &self.factors, &stats)?;

        if prior_inactive(&self.prior) {
            normalize_scm(&mut self.model, &mut self.factors);
        }
        Ok(())
    }

    fn finite(&self) -> bool {
        self.factors.all_finite() && self.model.all_finite()
    }
}

/// Runs MNMF (or s-MNMF when `cfg.sparse`).
///
/// The input is scaled to unit mean power first; estimates are scaled back.
pub fn run_mnmf(x: &Spectrogram, cfg: &MnmfConfig) -> Result<SeparationResult> {
    let (xn, scale) = normalize_input(x)?;
    let mut state = MnmfState::new(xn, cfg)?;
    let mut trace = Vec::new();
    if cfg.trace_cost {
        trace.push(state.cost()?);
    }
    for it in 1..=cfg.iterations {
        state.step().map_err(|e| match e {
            Error::Singular | Error::ContractViolation(_) => Error::Diverged { iteration: it },
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
    let mut sources = extract_sources_wiener(&state.x, &state.model, &state.factors, cfg.reference_channel)?;
    sources.scale_mut(scale);
    Ok(SeparationResult {
        sources,
        cost_trace: trace,
        factors: state.factors,
        spatial: SpatialEstimate::Covariances(state.model),
        input_scale: scale,
    })
}
