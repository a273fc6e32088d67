//! Synthetic sources whose power spectrograms are exactly `W H`.
//!
//! Bases are uniform on `(0, 1)`. Activations are `max(0, Laplace(-0.5, 1))`,
//! which zeroes roughly 70% of them. Each STFT coefficient is
//! `sqrt(lambda) e^{i phi}` with uniform phase, then the waveform is
//! resynthesized with [`istft`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use sparsebss_core::source::Matrix;
use sparsebss_core::{SourceFactors, Spectrogram, Waveform};

use crate::error::{Error, Result};
use crate::stft::{istft, StftConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub stft: StftConfig,
    pub frames: usize,
    pub bases: usize,
    pub sources: usize,
    pub sample_rate: u32,
    pub seed: u64,
    pub laplace_loc: f64,
    pub laplace_scale: f64,
}

impl SynthConfig {
    pub fn new(stft: StftConfig, frames: usize, bases: usize, sources: usize, seed: u64) -> Self {
        Self {
            stft,
            frames,
            bases,
            sources,
            sample_rate: 16000,
            seed,
            laplace_loc: -0.5,
            laplace_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSources {
    /// Channel `n` is source `n`.
    pub waveforms: Waveform,
    /// The designed STFT coefficients, channel `n` per source.
    pub spectra: Spectrogram,
    /// Generating factors: `|spectra_n|^2 = W_n H_n` before flooring.
    pub factors: SourceFactors,
}

pub fn synth_nmf_sources(cfg: &SynthConfig) -> Result<SynthSources> {
    cfg.stft.validate()?;
    if cfg.frames < 2 || cfg.bases == 0 || cfg.sources == 0 {
        return Err(Error::Config("need at least two frames, one basis and one source".into()));
    }
    if !(cfg.laplace_scale > 0.0) {
        return Err(Error::Config("Laplace scale must be positive".into()));
    }
    let bins = cfg.stft.bins();
    let len = cfg.stft.len_for_frames(cfg.frames);
    if len == 0 {
        return Err(Error::Config("too few frames for the chosen STFT".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bases = Vec::with_capacity(cfg.sources);
    let mut activations = Vec::with_capacity(cfg.sources);
    for _ in 0..cfg.sources {
        bases.push(Matrix::from_fn(bins, cfg.bases, |_, _| rng.random::<f64>()));
        activations.push(Matrix::from_fn(cfg.bases, cfg.frames, |_, _| {
            let a: f64 = rng.sample(Exp1);
            let b: f64 = rng.sample(Exp1);
            (cfg.laplace_loc + cfg.laplace_scale * (a - b)).max(0.0)
        }));
    }
    let mut factors = SourceFactors::new(bases, activations)?;

    let mut spectra = Spectrogram::zeros(cfg.stft.fft_size, cfg.stft.hop, cfg.frames, cfg.sources, len)?;
    for n in 0..cfg.sources {
        let power = factors.bases[n].matmul(&factors.activations[n]);
        for f in 0..bins {
            for t in 0..cfg.frames {
                let phase = if f == 0 || f == bins - 1 { 0.0 } else { rng.random_range(0.0..2.0 * PI) };
                spectra.set(f, t, n, Complex64::from_polar(power[(f, t)].sqrt(), phase));
            }
        }
    }
    let mut waveforms = istft(&spectra, cfg.sample_rate)?;
    let peak = waveforms
        .channels()
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        // Peak 0.5; spectra and bases follow so |spectra|^2 = W H still holds.
        let s = 0.5 / peak;
        let scaled = waveforms.channels().iter().map(|c| c.iter().map(|v| v * s).collect()).collect();
        waveforms = Waveform::new(cfg.sample_rate, scaled)?;
        spectra.scale_mut(s);
        for w in &mut factors.bases {
            w.scale_mut(s * s);
        }
    }
    Ok(SynthSources {
        waveforms,
        spectra,
        factors,
    })
}
