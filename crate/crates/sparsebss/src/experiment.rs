//! Batch runner: T60 grid x algorithms x trials on simulated two-source
//! mixtures, reporting SDR/SIR improvements.
//!
//! Experiment file (TOML):
//!
//! ```toml
//! t60_list = [0.15, 0.3]
//! algos = ["ilrma", "s-ilrma"]
//! trials = 10
//! seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]   # optional, one per trial
//! max_order = 20    # optional image-source order cap
//! rir_length = 4800 # optional, samples
//!
//! [room]          # optional, defaults shown
//! dimensions = [8.0, 8.0, 3.0]
//! mic_spacing = 0.0283
//! source_distance = 2.0
//! height = 1.5
//! sample_rate = 16000
//!
//! [stft]          # optional
//! fft = 4096
//! hop = 2048
//!
//! [separation]    # optional
//! iterations = 100
//! bases = 10
//! mu = 0.05
//! rho = 10.0
//!
//! [signals]       # optional
//! frames = 128
//! bases = 10
//! # wav_pairs = [["a.wav", "b.wav"]]   # used round-robin instead of synthetic sources
//! ```
//!
//! Trial `k` uses seed `seeds[k]` (default `k`) for the source angles, the
//! synthetic sources and the separation initialization, so every algorithm
//! sees the same mixture.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparsebss_core::separation::Algorithm;

use crate::error::{Error, Result};
use crate::metrics::improvement;
use crate::scene::{simulate, Geometry};
use crate::separate::{separate, SeparationParams, DEFAULT_MU, DEFAULT_RHO};
use crate::stft::StftConfig;
use crate::synth::{synth_nmf_sources, SynthConfig};
use crate::wav::read_wav;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub room: Geometry,
    pub t60_list: Vec<f64>,
    pub algos: Vec<String>,
    pub trials: usize,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub stft: StftSection,
    #[serde(default)]
    pub separation: SeparationSection,
    #[serde(default)]
    pub signals: SignalSection,
    #[serde(default)]
    pub max_order: Option<usize>,
    #[serde(default)]
    pub rir_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftSection {
    pub fft: usize,
    pub hop: usize,
}

impl Default for StftSection {
    fn default() -> Self {
        Self { fft: 4096, hop: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparationSection {
    pub iterations: usize,
    pub bases: usize,
    pub mu: f64,
    pub rho: f64,
}

impl Default for SeparationSection {
    fn default() -> Self {
        Self {
            iterations: 100,
            bases: 10,
            mu: DEFAULT_MU,
            rho: DEFAULT_RHO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub frames: usize,
    pub bases: usize,
    pub wav_pairs: Option<Vec<[PathBuf; 2]>>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            frames: 128,
            bases: 10,
            wav_pairs: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<experiment>".into(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algos
            .iter()
            .map(|a| a.parse::<Algorithm>().map_err(Error::from))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.algorithms()?;
        self.stft_config()?;
        if self.t60_list.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Config("every T60 must be a nonnegative number of seconds".into()));
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.trials {
                return Err(Error::Config(format!(
                    "{} seeds given for {} trials",
                    seeds.len(),
                    self.trials
                )));
            }
        }
        if self.separation.iterations == 0 || self.separation.bases == 0 {
            return Err(Error::Config("iterations and bases must be at least 1".into()));
        }
        if !(self.separation.mu >= 0.0) || !(self.separation.rho >= 0.0) {
            return Err(Error::Config("mu and rho must be nonnegative".into()));
        }
        if self.signals.frames < 2 || self.signals.bases == 0 {
            return Err(Error::Config("signals need at least two frames and one basis".into()));
        }
        if matches!(&self.signals.wav_pairs, Some(p) if p.is_empty()) {
            return Err(Error::Config("wav_pairs is empty".into()));
        }
        Ok(())
    }

    pub fn stft_config(&self) -> Result<StftConfig> {
        StftConfig::new(self.stft.fft, self.stft.hop)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seeds.as_ref().map_or(trial as u64, |s| s[trial])
    }

    pub fn params(&self, algorithm: Algorithm, seed: u64) -> Result<SeparationParams> {
        Ok(SeparationParams {
            stft: self.stft_config()?,
            bases: self.separation.bases,
            iterations: self.separation.iterations,
            mu: self.separation.mu,
            rho: self.separation.rho,
            seed,
            trace_cost: false,
            ..SeparationParams::new(algorithm)
        })
    }
}

/// Source angles in degrees: one from `[0, 90]`, one from `[-90, 0]`.
pub fn draw_angles(seed: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11E_5EED);
    [rng.random_range(0.0..=90.0), -rng.random_range(0.0..=90.0)]
}

/// The two dry source signals of one trial.
pub fn trial_sources(spec: &ExperimentSpec, trial: usize) -> Result<Vec<Vec<f64>>> {
    let seed = spec.trial_seed(trial);
    if let Some(pairs) = &spec.signals.wav_pairs {
        let pair = &pairs[trial % pairs.len()];
        let a = read_wav(&pair[0])?;
        let b = read_wav(&pair[1])?;
        let len = a.len().min(b.len());
        return Ok(vec![a.channel(0)[..len].to_vec(), b.channel(0)[..len].to_vec()]);
    }
    let mut cfg = SynthConfig::new(spec.stft_config()?, spec.signals.frames, spec.signals.bases, 2, seed);
    cfg.sample_rate = spec.room.sample_rate;
    Ok(synth_nmf_sources(&cfg)?.waveforms.into_channels())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub algo: String,
    pub t60: f64,
    pub trial: usize,
    pub sdr_impr: f64,
    pub sir_impr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algo: String,
    pub t60: f64,
    pub trials: usize,
    pub sdr_impr_mean: f64,
    pub sdr_impr_std: f64,
    pub sir_impr_mean: f64,
    pub sir_impr_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Vec<Summary>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every algorithm on one trial; returns `(sdr_impr, sir_impr)` per algorithm.
pub fn run_trial(spec: &ExperimentSpec, t60: f64, trial: usize, algos: &[Algorithm]) -> Result<Vec<(f64, f64)>> {
    let seed = spec.trial_seed(trial);
    let room = spec.room.room(t60, &draw_angles(seed), spec.rir_length)?;
    let dry = trial_sources(spec, trial)?;
    let mix = simulate(&room, &dry, spec.max_order, 0)?;
    let mut out = Vec::with_capacity(algos.len());
    for &algo in algos {
        let params = spec.params(algo, seed)?;
        let sep = separate(&mix.mixture, &params)?;
        let est: Vec<Vec<f64>> = sep.sources.into_channels();
        let imp = improvement(&est, &mix.images, mix.mixture.channel(0))?;
        log::info!(
            "t60={t60} trial={trial} {algo}: SDR impr {:.2} dB, SIR impr {:.2} dB",
            imp.mean_sdr_impr(),
            imp.mean_sir_impr()
        );
        out.push((imp.mean_sdr_impr(), imp.mean_sir_impr()));
    }
    Ok(out)
}

/// Runs the whole grid on `jobs` worker threads (0 picks the default).
/// The report does not depend on `jobs`.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Report> {
    spec.validate()?;
    let algos = spec.algorithms()?;
    if algos.is_empty() || spec.t60_list.is_empty() || spec.trials == 0 {
        return Ok(Report {
            rows: Vec::new(),
            summary: Vec::new(),
        });
    }
    let cells: Vec<(usize, usize)> = (0..spec.t60_list.len())
        .flat_map(|c| (0..spec.trials).map(move |k| (c, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Vec<(f64, f64)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(c, k)| run_trial(spec, spec.t60_list[c], k, &algos))
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (c, &t60) in spec.t60_list.iter().enumerate() {
        for (a, algo) in algos.iter().enumerate() {
            let mut sdr = Vec::with_capacity(spec.trials);
            let mut sir = Vec::with_capacity(spec.trials);
            for k in 0..spec.trials {
                let (d, i) = results[c * spec.trials + k][a];
                rows.push(Row {
                    algo: algo.name().to_string(),
                    t60,
                    trial: k,
                    sdr_impr: d,
                    sir_impr: i,
                });
                sdr.push(d);
                sir.push(i);
            }
            let (sdr_impr_mean, sdr_impr_std) = mean_std(&sdr);
            let (sir_impr_mean, sir_impr_std) = mean_std(&sir);
            summary.push(Summary {
                algo: algo.name().to_string(),
                t60,
                trials: spec.trials,
                sdr_impr_mean,
                sdr_impr_std,
                sir_impr_mean,
                sir_impr_std,
            });
        }
    }
    Ok(Report { rows, summary })
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[Row]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(["algo", "t60", "trial", "sdr_impr", "sir_impr"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary(path: impl AsRef<Path>, summary: &[Summary]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
