//! Waveform-in, waveform-out separation with any of the four algorithms.

use sparsebss_core::ilrma::{run_ilrma, BasisRule, IlrmaConfig};
use sparsebss_core::mnmf::{run_mnmf, MnmfConfig};
use sparsebss_core::separation::Algorithm;
use sparsebss_core::{SeparationResult, Spectrogram, Waveform};

use crate::error::{Error, Result};
use crate::stft::{istft, stft, StftConfig};

/// Laplace weight used by the sparse variants unless overridden.
pub const DEFAULT_MU: f64 = 0.05;
/// Bingham offset used by the sparse variants unless overridden.
pub const DEFAULT_RHO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationParams {
    pub algorithm: Algorithm,
    pub stft: StftConfig,
    pub bases: usize,
    pub iterations: usize,
    pub mu: f64,
    pub rho: f64,
    pub bingham_weight: f64,
    pub basis_rule: BasisRule,
    pub seed: u64,
    pub reference_channel: usize,
    /// Source count for MNMF; ILRMA always uses the channel count.
    pub sources: Option<usize>,
    pub trace_cost: bool,
}

impl SeparationParams {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            stft: StftConfig::default(),
            bases: 10,
            iterations: 100,
            mu: DEFAULT_MU,
            rho: DEFAULT_RHO,
            bingham_weight: 1.0,
            basis_rule: BasisRule::DerivedCubic,
            seed: 0,
            reference_channel: 0,
            sources: None,
            trace_cost: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.bases == 0 {
            return Err(Error::Config("bases must be at least 1".into()));
        }
        for (name, v) in [("mu", self.mu), ("rho", self.rho), ("Bingham weight", self.bingham_weight)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a nonnegative number")));
            }
        }
        Ok(())
    }

    pub fn ilrma_config(&self) -> IlrmaConfig {
        let base = if self.algorithm.is_sparse() {
            IlrmaConfig::sparse()
        } else {
            IlrmaConfig::plain()
        };
        IlrmaConfig {
            iterations: self.iterations,
            bases: self.bases,
            mu: self.mu,
            rho: self.rho,
            bingham_weight: self.bingham_weight,
            basis_rule: self.basis_rule,
            seed: self.seed,
            trace_cost: self.trace_cost,
            reference_channel: self.reference_channel,
            sources: self.sources,
            ..base
        }
    }

    pub fn mnmf_config(&self) -> MnmfConfig {
        let base = if self.algorithm.is_sparse() {
            MnmfConfig::sparse()
        } else {
            MnmfConfig::plain()
        };
        MnmfConfig {
            iterations: self.iterations,
            bases: self.bases,
            mu: self.mu,
            rho: self.rho,
            bingham_weight: self.bingham_weight,
            seed: self.seed,
            trace_cost: self.trace_cost,
            reference_channel: self.reference_channel,
            sources: self.sources,
            ..base
        }
    }
}

pub fn separate_spectrogram(x: &Spectrogram, params: &SeparationParams) -> Result<SeparationResult> {
    params.validate()?;
    let result = match params.algorithm {
        Algorithm::Ilrma | Algorithm::SparseIlrma => run_ilrma(x, &params.ilrma_config())?,
        Algorithm::Mnmf | Algorithm::SparseMnmf => run_mnmf(x, &params.mnmf_config())?,
    };
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct Separated {
    /// Channel `n` is estimated source `n` at the reference microphone.
    pub sources: Waveform,
    pub result: SeparationResult,
}

pub fn separate(mixture: &Waveform, params: &SeparationParams) -> Result<Separated> {
    params.validate()?;
    if mixture.num_channels() < 2 {
        return Err(Error::Config(format!(
            "separation needs at least two channels, got {}",
            mixture.num_channels()
        )));
    }
    let x = stft(mixture, &params.stft)?;
    let result = separate_spectrogram(&x, params)?;
    let sources = istft(&result.sources, mixture.sample_rate)?;
    Ok(Separated { sources, result })
}
