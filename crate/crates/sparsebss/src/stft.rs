//! Hann-windowed STFT and its weighted overlap-add inverse.
//!
//! The signal is zero-padded by `fft_size - hop` samples at both ends so
//! that every original sample is covered by the same number of frames.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use sparsebss_core::{Spectrogram, Waveform};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: 4096,
            hop: 2048,
        }
    }
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize) -> Result<Self> {
        let cfg = Self { fft_size, hop };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Power-of-two FFT size, hop dividing it and at least 50% overlap.
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!("fft size {} must be a power of two", self.fft_size)));
        }
        if self.hop == 0 || self.fft_size % self.hop != 0 || self.fft_size / self.hop < 2 {
            return Err(Error::Config(format!(
                "hop {} must divide fft size {} with at least two frames of overlap",
                self.hop, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn pad(&self) -> usize {
        self.fft_size - self.hop
    }

    /// Frames produced for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        (padded - self.fft_size).div_ceil(self.hop) + 1
    }

    /// Signal length that yields exactly `frames` frames with no partial tail.
    pub fn len_for_frames(&self, frames: usize) -> usize {
        ((frames - 1) * self.hop + self.fft_size).saturating_sub(2 * self.pad())
    }
}

/// Periodic Hann window `0.5 - 0.5 cos(2 pi n / N)`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

fn plan(fft_size: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(fft_size)
    } else {
        planner.plan_fft_forward(fft_size)
    }
}

pub fn stft(w: &Waveform, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if w.is_empty() || w.num_channels() == 0 {
        return Err(Error::Config("cannot transform an empty signal".into()));
    }
    let (n, pad, hop) = (cfg.fft_size, cfg.pad(), cfg.hop);
    let frames = cfg.frames_for(w.len());
    let window = hann(n);
    let fft = plan(n, false);
    let mut out = Spectrogram::zeros(n, hop, frames, w.num_channels(), w.len())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (m, ch) in w.channels().iter().enumerate() {
        for t in 0..frames {
            let start = t * hop;
            for (i, b) in buf.iter_mut().enumerate() {
                let pos = start + i;
                let sample = if pos >= pad && pos - pad < ch.len() { ch[pos - pad] } else { 0.0 };
                *b = Complex64::new(sample * window[i], 0.0);
            }
            fft.process(&mut buf);
            for (f, v) in buf.iter().take(cfg.bins()).enumerate() {
                out.set(f, t, m, *v);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`stft`]. The output has the recorded signal length, or the full
/// unpadded span when the spectrogram carries no length.
pub fn istft(s: &Spectrogram, sample_rate: u32) -> Result<Waveform> {
    let cfg = StftConfig::new(s.fft_size(), s.hop())?;
    let (n, pad, hop, frames) = (cfg.fft_size, cfg.pad(), cfg.hop, s.frames());
    let total = (frames - 1) * hop + n;
    let len = if s.signal_len() > 0 {
        s.signal_len()
    } else {
        total.saturating_sub(2 * pad)
    };
    if pad + len > total {
        return Err(Error::Config(format!(
            "spectrogram with {frames} frames cannot hold a signal of {len} samples"
        )));
    }
    let window = hann(n);
    let mut norm = vec![0.0; total];
    for t in 0..frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * hop + i] += w * w;
        }
    }
    let ifft = plan(n, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut channels = Vec::with_capacity(s.channels());
    for m in 0..s.channels() {
        let mut acc = vec![0.0; total];
        for t in 0..frames {
            for f in 0..cfg.bins() {
                let v = s.get(f, t, m);
                if f == 0 || f == n / 2 {
                    buf[f] = Complex64::new(v.re, 0.0);
                } else {
                    buf[f] = v;
                    buf[n - f] = v.conj();
                }
            }
            ifft.process(&mut buf);
            for (i, w) in window.iter().enumerate() {
                acc[t * hop + i] += buf[i].re / n as f64 * w;
            }
        }
        channels.push((pad..pad + len).map(|i| acc[i] / norm[i]).collect());
    }
    Ok(Waveform::new(sample_rate, channels)?)
}
