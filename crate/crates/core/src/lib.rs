//! Numerical core for multichannel blind source separation with sparse
//! source priors.
//!
//! The crate is `no_std` (it needs `alloc`). It carries the pieces that are
//! pure arithmetic:
//!
//! * [`kernel`]: small Hermitian matrix functions and the Riccati solver,
//! * [`source`]: the low-rank nonnegative source model and its
//!   Bingham/Laplace penalty,
//! * [`ilrma`] and [`mnmf`]: the two separation engines, each with a plain
//!   and a sparsity-regularized variant,
//! * [`room`]: image-source room impulse responses.
//!
//! STFT, WAV files, mixing, metrics and the command line live in the
//! `sparsebss` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod ilrma;
pub mod kernel;
pub mod mnmf;
pub mod room;
pub mod separation;
pub mod signal;
pub mod source;

pub use error::{Error, Result};
pub use kernel::CMatrix;
pub use separation::{SeparationResult, SpatialEstimate};
pub use signal::{Spectrogram, Waveform};
pub use source::{Matrix, SourceFactors, SparsePrior};
