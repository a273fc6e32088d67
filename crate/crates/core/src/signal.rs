//! Time-domain and STFT-domain containers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Multichannel audio, one `Vec` per channel, nominal range `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl Waveform {
    /// All channels must have equal length.
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(first) = channels.first() {
            let len = first.len();
            if let Some(bad) = channels.iter().find(|c| c.len() != len) {
                return Err(Error::InvalidInput(format!(
                    "channel lengths differ: {len} vs {}",
                    bad.len()
                )));
            }
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, m: usize) -> &[f64] {
        &self.channels[m]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }
}

/// Complex STFT tensor `x[f][t][m]` with `F = fft_size / 2 + 1` one-sided bins.
///
/// Storage is frequency-major with channels innermost, so the `M`-vector of
/// one time-frequency point is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    fft_size: usize,
    hop: usize,
    frames: usize,
    channels: usize,
    /// Length of the time-domain signal the frames were cut from.
    signal_len: usize,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn zeros(fft_size: usize, hop: usize, frames: usize, channels: usize, signal_len: usize) -> Result<Self> {
        if fft_size < 2 || fft_size % 2 != 0 {
            return Err(Error::InvalidInput(format!("fft size {fft_size} must be even and >= 2")));
        }
        if hop == 0 || frames == 0 || channels == 0 {
            return Err(Error::InvalidInput("hop, frame count and channel count must be positive".into()));
        }
        let bins = fft_size / 2 + 1;
        Ok(Self {
            fft_size,
            hop,
            frames,
            channels,
            signal_len,
            data: vec![Complex64::new(0.0, 0.0); bins * frames * channels],
        })
    }

    /// Same layout as `template` but with `channels` channels and zero data.
    pub fn zeros_like(template: &Spectrogram, channels: usize) -> Self {
        Self {
            channels,
            data: vec![Complex64::new(0.0, 0.0); template.bins() * template.frames * channels],
            ..template.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Self {
            fft_size: self.fft_size,
            hop: self.hop,
            frames: self.frames,
            channels: self.channels,
            signal_len: self.signal_len,
            data: Vec::new(),
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    #[inline]
    fn offset(&self, f: usize, t: usize) -> usize {
        (f * self.frames + t) * self.channels
    }

    #[inline]
    pub fn get(&self, f: usize, t: usize, m: usize) -> Complex64 {
        self.data[self.offset(f, t) + m]
    }

    #[inline]
    pub fn set(&mut self, f: usize, t: usize, m: usize, v: Complex64) {
        let o = self.offset(f, t);
        self.data[o + m] = v;
    }

    /// The `M`-vector observed at bin `f`, frame `t`.
    #[inline]
    pub fn frame_vec(&self, f: usize, t: usize) -> &[Complex64] {
        let o = self.offset(f, t);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn frame_vec_mut(&mut self, f: usize, t: usize) -> &mut [Complex64] {
        let o = self.offset(f, t);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    /// All frames of bin `f`, `T x M` row-major.
    #[inline]
    pub fn bin(&self, f: usize) -> &[Complex64] {
        let o = self.offset(f, 0);
        &self.data[o..o + self.frames * self.channels]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Mean of `|x|^2` over all bins, frames and channels.
    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    pub fn scale_mut(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// Copies out one channel as a single-channel spectrogram.
    pub fn channel(&self, m: usize) -> Spectrogram {
        let mut out = Spectrogram::zeros_like(self, 1);
        for f in 0..self.bins() {
            for t in 0..self.frames {
                out.set(f, t, 0, self.get(f, t, m));
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_rejects_ragged_channels() {
        assert!(Waveform::new(16000, vec![vec![0.0; 3], vec![0.0; 4]]).is_err());
        assert!(Waveform::new(0, vec![vec![0.0; 3]]).is_err());
        let w = Waveform::new(16000, vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        assert_eq!((w.num_channels(), w.len()), (2, 3));
    }

    #[test]
    fn spectrogram_layout() {
        let mut s = Spectrogram::zeros(8, 4, 3, 2, 10).unwrap();
        assert_eq!(s.bins(), 5);
        s.set(4, 2, 1, Complex64::new(1.0, -1.0));
        assert_eq!(s.frame_vec(4, 2), &[Complex64::new(0.0, 0.0), Complex64::new(1.0, -1.0)]);
        assert_eq!(s.channel(1).get(4, 2, 0), Complex64::new(1.0, -1.0));
        assert!(Spectrogram::zeros(7, 4, 3, 2, 10).is_err());
    }
}
