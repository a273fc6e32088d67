//! Multichannel blind source separation toolkit.
//!
//! The numerical engines (ILRMA, MNMF and their sparse variants, the
//! Hermitian kernel, the source model and the image-source room model) live
//! in the `no_std` crate [`sparsebss_core`], re-exported here as [`engine`].
//! This crate adds the STFT, WAV files, convolutive mixing, synthetic
//! sources, SDR/SIR evaluation and the batch experiment runner.

pub use sparsebss_core as engine;
pub use sparsebss_core::separation::Algorithm;
pub use sparsebss_core::{SeparationResult, Spectrogram, Waveform};

pub mod error;
pub mod experiment;
pub mod factors_io;
pub mod metrics;
pub mod mixing;
pub mod scene;
pub mod separate;
pub mod stft;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
pub use separate::{separate, SeparationParams};
pub use stft::{istft, stft, StftConfig};
