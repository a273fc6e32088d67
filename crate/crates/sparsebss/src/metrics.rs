//! BSS-eval style SDR and SIR with 512-tap projection filters, plus
//! permutation alignment.
//!
//! For an estimate `e` and references `s_1..s_N`, `P_all` projects `e` onto
//! the span of every reference delayed by `0..L-1` samples and `P_j` onto the
//! delays of `s_j` alone. Then `target = P_j e`, `interference = P_all e - target`,
//! `artifacts = e - P_all e`, and
//! `SDR = 10 log10(|target|^2 / |interference + artifacts|^2)`,
//! `SIR = 10 log10(|target|^2 / |interference|^2)`, both clamped to `[-80, 80]` dB.

use itertools::Itertools;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const PROJECTION_TAPS: usize = 512;
pub const CLAMP_DB: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Per reference, for the estimate assigned to it.
    pub sdr: Vec<f64>,
    pub sir: Vec<f64>,
    /// `permutation[i]` is the estimate assigned to reference `i`.
    pub permutation: Vec<usize>,
}

impl MetricsReport {
    pub fn mean_sdr(&self) -> f64 {
        mean(&self.sdr)
    }

    pub fn mean_sir(&self) -> f64 {
        mean(&self.sir)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// SDR and SIR of every estimate against every reference: `sdr[j][i]` is
/// estimate `j` scored as reference `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMetrics {
    pub sdr: Vec<Vec<f64>>,
    pub sir: Vec<Vec<f64>>,
}

fn to_db(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        return -CLAMP_DB;
    }
    if den <= 0.0 {
        return CLAMP_DB;
    }
    (10.0 * (num / den).log10()).clamp(-CLAMP_DB, CLAMP_DB)
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

struct Projector {
    taps: usize,
    padded_len: usize,
    nfft: usize,
    /// FFT of each zero-padded reference.
    spectra: Vec<Vec<Complex64>>,
    all: Cholesky<f64, Dyn>,
    single: Vec<Cholesky<f64, Dyn>>,
}

impl Projector {
    fn new(references: &[Vec<f64>], taps: usize) -> Result<Self> {
        let len = references[0].len();
        let padded_len = len + taps - 1;
        let nfft = padded_len.next_power_of_two();
        let spectra: Vec<Vec<Complex64>> = references.iter().map(|r| fft_real(r, nfft)).collect();
        let n = references.len();
        // corr[i][j][lag + taps - 1] = sum_u s_i(u) s_j(u + lag)
        let mut corr = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let prod: Vec<Complex64> = spectra[i].iter().zip(&spectra[j]).map(|(a, b)| a.conj() * b).collect();
                let c = ifft_real(prod);
                corr[i][j] = (0..2 * taps - 1)
                    .map(|k| {
                        let lag = k as isize - (taps as isize - 1);
                        c[lag.rem_euclid(nfft as isize) as usize]
                    })
                    .collect();
            }
        }
        // <s_i(. - a), s_j(. - b)> = corr_ij(a - b)
        let gram = DMatrix::from_fn(n * taps, n * taps, |r, c| {
            let (i, a) = (r / taps, r % taps);
            let (j, b) = (c / taps, c % taps);
            corr[i][j][a + taps - 1 - b]
        });
        let all = factor(gram.clone())?;
        let single = (0..n)
            .map(|i| factor(gram.view((i * taps, i * taps), (taps, taps)).into_owned()))
            .collect::<Result<_>>()?;
        Ok(Self {
            taps,
            padded_len,
            nfft,
            spectra,
            all,
            single,
        })
    }

    /// `sum_u s_i(u) e(u + a)` for every reference `i` and delay `a`.
    fn cross(&self, estimate: &[f64]) -> Vec<Vec<f64>> {
        let fe = fft_real(estimate, self.nfft);
        self.spectra
            .iter()
            .map(|fs| {
                let prod: Vec<Complex64> = fs.iter().zip(&fe).map(|(a, b)| a.conj() * b).collect();
                ifft_real(prod)[..self.taps].to_vec()
            })
            .collect()
    }

    /// `sum_i (c_i * s_i)` over the padded length.
    fn synthesize(&self, coeffs: &[(usize, &[f64])]) -> Vec<f64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.nfft];
        for (i, c) in coeffs {
            let fc = fft_real(c, self.nfft);
            for ((a, x), y) in acc.iter_mut().zip(&fc).zip(&self.spectra[*i]) {
                *a += x * y;
            }
        }
        let mut out = ifft_real(acc);
        out.truncate(self.padded_len);
        out
    }
}

fn factor(mut gram: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(gram.clone()) {
        return Ok(c);
    }
    let load = 1e-10 * gram.diagonal().mean().max(f64::MIN_POSITIVE);
    for k in 0..gram.nrows() {
        gram[(k, k)] += load;
    }
    Cholesky::new(gram).ok_or_else(|| Error::Config("reference signals are degenerate (zero or collinear)".into()))
}

fn fft_real(v: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

fn ifft_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

fn check_inputs(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<()> {
    if estimates.is_empty() || references.is_empty() {
        return Err(Error::Config("need at least one estimate and one reference".into()));
    }
    let len = references[0].len();
    if len == 0 {
        return Err(Error::Config("signals are empty".into()));
    }
    if let Some(bad) = estimates.iter().chain(references).find(|s| s.len() != len) {
        return Err(Error::Config(format!(
            "signal lengths differ: {len} vs {} samples",
            bad.len()
        )));
    }
    Ok(())
}

pub fn pairwise_metrics(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<PairwiseMetrics> {
    check_inputs(estimates, references)?;
    let taps = PROJECTION_TAPS;
    let proj = Projector::new(references, taps)?;
    let n = references.len();
    let mut sdr = Vec::with_capacity(estimates.len());
    let mut sir = Vec::with_capacity(estimates.len());
    for est in estimates {
        let cross = proj.cross(est);
        let rhs = DVector::from_iterator(n * taps, cross.iter().flatten().copied());
        let c_all = proj.all.solve(&rhs);
        let parts: Vec<(usize, &[f64])> = (0..n).map(|i| (i, &c_all.as_slice()[i * taps..(i + 1) * taps])).collect();
        let p_all = proj.synthesize(&parts);
        let mut padded = est.clone();
        padded.resize(proj.padded_len, 0.0);
        let artifacts: Vec<f64> = padded.iter().zip(&p_all).map(|(e, p)| e - p).collect();

        let mut row_sdr = Vec::with_capacity(n);
        let mut row_sir = Vec::with_capacity(n);
        for i in 0..n {
            let c_i = proj.single[i].solve(&DVector::from_column_slice(&cross[i]));
            let target = proj.synthesize(&[(i, c_i.as_slice())]);
            let interference: Vec<f64> = p_all.iter().zip(&target).map(|(p, t)| p - t).collect();
            let distortion: Vec<f64> = interference.iter().zip(&artifacts).map(|(a, b)| a + b).collect();
            let t_energy = energy(&target);
            row_sdr.push(to_db(t_energy, energy(&distortion)));
            row_sir.push(to_db(t_energy, energy(&interference)));
        }
        sdr.push(row_sdr);
        sir.push(row_sir);
    }
    Ok(PairwiseMetrics { sdr, sir })
}

/// Assignment of estimates to references maximizing mean SIR, by exhaustive
/// search; `result[i]` is the estimate for reference `i`.
pub fn best_permutation(pairs: &PairwiseMetrics, references: usize) -> Result<Vec<usize>> {
    let estimates = pairs.sir.len();
    if estimates < references {
        return Err(Error::Config(format!(
            "{estimates} estimates cannot cover {references} references"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..estimates).permutations(references) {
        let score: f64 = perm.iter().enumerate().map(|(i, &j)| pairs.sir[j][i]).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, perm));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or_default())
}

pub fn permute_align(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<Vec<usize>> {
    best_permutation(&pairwise_metrics(estimates, references)?, references.len())
}

/// Metrics after permutation alignment.
pub fn sdr_sir(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<MetricsReport> {
    let pairs = pairwise_metrics(estimates, references)?;
    let permutation = best_permutation(&pairs, references.len())?;
    Ok(MetricsReport {
        sdr: permutation.iter().enumerate().map(|(i, &j)| pairs.sdr[j][i]).collect(),
        sir: permutation.iter().enumerate().map(|(i, &j)| pairs.sir[j][i]).collect(),
        permutation,
    })
}

/// Aligned metrics of the estimates, the same metrics for the unprocessed
/// mixture channel, and their differences per reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub separated: MetricsReport,
    pub baseline_sdr: Vec<f64>,
    pub baseline_sir: Vec<f64>,
    pub sdr_impr: Vec<f64>,
    pub sir_impr: Vec<f64>,
}

impl Improvement {
    pub fn mean_sdr_impr(&self) -> f64 {
        mean(&self.sdr_impr)
    }

    pub fn mean_sir_impr(&self) -> f64 {
        mean(&self.sir_impr)
    }
}

pub fn improvement(estimates: &[Vec<f64>], references: &[Vec<f64>], mixture: &[f64]) -> Result<Improvement> {
    let separated = sdr_sir(estimates, references)?;
    let base = pairwise_metrics(&[mixture.to_vec()], references)?;
    let baseline_sdr = base.sdr[0].clone();
    let baseline_sir = base.sir[0].clone();
    let sdr_impr = separated.sdr.iter().zip(&baseline_sdr).map(|(a, b)| a - b).collect();
    let sir_impr = separated.sir.iter().zip(&baseline_sir).map(|(a, b)| a - b).collect();
    Ok(Improvement {
        separated,
        baseline_sdr,
        baseline_sir,
        sdr_impr,
        sir_impr,
    })
}
