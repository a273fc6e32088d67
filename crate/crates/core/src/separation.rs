//! Types shared by both engines.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::ilrma::DemixingSet;
use crate::mnmf::SpatialModel;
use crate::signal::Spectrogram;
use crate::source::SourceFactors;

/// The four separation algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ilrma,
    SparseIlrma,
    Mnmf,
    SparseMnmf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Ilrma, Self::SparseIlrma, Self::Mnmf, Self::SparseMnmf];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ilrma => "ilrma",
            Self::SparseIlrma => "s-ilrma",
            Self::Mnmf => "mnmf",
            Self::SparseMnmf => "s-mnmf",
        }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Self::SparseIlrma | Self::SparseMnmf)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(String::from("unknown algorithm (expected ilrma, s-ilrma, mnmf or s-mnmf)")))
    }
}

/// Learned spatial parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialEstimate {
    Demixing(DemixingSet),
    Covariances(SpatialModel),
}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    /// Source images at the reference channel: channel `n` holds source `n`.
    pub sources: Spectrogram,
    /// Cost before the first iteration followed by the cost after each iteration.
    /// Evaluated on the power-normalized input.
    pub cost_trace: Vec<f64>,
    pub factors: SourceFactors,
    pub spatial: SpatialEstimate,
    /// Factor the input was divided by before running the updates.
    pub input_scale: f64,
}

/// Scales `x` to unit mean power; returns the scaled copy and the divisor.
pub fn normalize_input(x: &Spectrogram) -> Result<(Spectrogram, f64)> {
    let p = x.mean_power();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidInput(String::from("input spectrogram is silent or non-finite")));
    }
    let scale = p.sqrt();
    let mut out = x.clone();
    out.scale_mut(1.0 / scale);
    Ok((out, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("fastmnmf".parse::<Algorithm>().is_err());
    }
}
