//! Convolutive mixing `x_m = sum_n s_n * rir_{n,m}`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use sparsebss_core::Waveform;

use crate::error::{Error, Result};

/// Below this many taps in the shorter operand, convolve directly.
const DIRECT_TAPS: usize = 64;

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= DIRECT_TAPS {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        buf
    };
    let mut fa = lift(a);
    let mut fb = lift(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.iter().take(out_len).map(|z| z.re / n as f64).collect()
}

/// A simulated mixture and the spatial image of every source at the
/// reference microphone.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub mixture: Waveform,
    /// `images[n]` is source `n` as heard at `reference_mic`.
    pub images: Vec<Vec<f64>>,
    pub reference_mic: usize,
}

/// Mixes equal-length sources through `rirs[source][mic]`; the result keeps
/// the source length (reverberant tails are cut).
pub fn convolve_mix(
    sources: &[Vec<f64>],
    rirs: &[Vec<Vec<f64>>],
    sample_rate: u32,
    reference_mic: usize,
) -> Result<Mixture> {
    if sources.is_empty() || sources.len() != rirs.len() {
        return Err(Error::Config(format!(
            "need one RIR set per source ({} sources, {} RIR sets)",
            sources.len(),
            rirs.len()
        )));
    }
    let len = sources[0].len();
    if sources.iter().any(|s| s.len() != len) {
        return Err(Error::Config("sources must have equal length".into()));
    }
    let mics = rirs[0].len();
    if mics == 0 || rirs.iter().any(|r| r.len() != mics) || reference_mic >= mics {
        return Err(Error::Config("every source needs one RIR per microphone".into()));
    }
    let mut channels = vec![vec![0.0; len]; mics];
    let mut images = Vec::with_capacity(sources.len());
    for (s, per_mic) in sources.iter().zip(rirs) {
        for (m, rir) in per_mic.iter().enumerate() {
            let mut y = convolve(s, rir);
            y.resize(len, 0.0);
            for (acc, v) in channels[m].iter_mut().zip(&y) {
                *acc += v;
            }
            if m == reference_mic {
                images.push(y);
            }
        }
    }
    Ok(Mixture {
        mixture: Waveform::new(sample_rate, channels)?,
        images,
        reference_mic,
    })
}
