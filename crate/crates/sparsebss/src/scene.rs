//! Room description files and the two-microphone evaluation geometry.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sparsebss_core::room::{all_rirs, Point, RoomSpec};

use crate::error::{Error, Result};
use crate::mixing::{convolve_mix, Mixture};

/// TOML room file:
///
/// ```toml
/// dimensions = [8.0, 8.0, 3.0]
/// t60 = 0.3
/// sample_rate = 16000
/// mics = [[3.98585, 4.0, 1.5], [4.01415, 4.0, 1.5]]
/// sources = [[5.0, 5.0, 1.5], [3.0, 5.5, 1.5]]
/// # optional
/// rir_length = 4800
/// max_order = 12
/// reference_mic = 0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomFile {
    pub dimensions: Point,
    pub t60: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    pub mics: Vec<Point>,
    pub sources: Vec<Point>,
    #[serde(default)]
    pub rir_length: Option<usize>,
    #[serde(default)]
    pub max_order: Option<usize>,
    #[serde(default)]
    pub reference_mic: usize,
}

fn default_rate() -> u32 {
    16000
}

impl RoomFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: RoomFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        file.spec().validate()?;
        if file.reference_mic >= file.mics.len() {
            return Err(Error::Config(format!("reference mic {} does not exist", file.reference_mic)));
        }
        Ok(file)
    }

    pub fn spec(&self) -> RoomSpec {
        RoomSpec {
            dimensions: self.dimensions,
            t60: self.t60,
            mics: self.mics.clone(),
            sources: self.sources.clone(),
            sample_rate: self.sample_rate,
            rir_length: self.rir_length,
        }
    }
}

/// Two microphones `spacing` apart along x at the room centre, and one
/// source per angle at `distance` from their midpoint, all at mid height.
/// Angles are in degrees from the normal of the microphone axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub dimensions: Point,
    pub mic_spacing: f64,
    pub source_distance: f64,
    pub height: f64,
    pub sample_rate: u32,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            dimensions: [8.0, 8.0, 3.0],
            mic_spacing: 0.0283,
            source_distance: 2.0,
            height: 1.5,
            sample_rate: 16000,
        }
    }
}

impl Geometry {
    pub fn room(&self, t60: f64, angles_deg: &[f64], rir_length: Option<usize>) -> Result<RoomSpec> {
        let [dx, dy, _] = self.dimensions;
        let centre = [dx / 2.0, dy / 2.0, self.height];
        let half = self.mic_spacing / 2.0;
        let mics = vec![[centre[0] - half, centre[1], centre[2]], [centre[0] + half, centre[1], centre[2]]];
        let sources = angles_deg
            .iter()
            .map(|a| {
                let r = a.to_radians();
                [
                    centre[0] + self.source_distance * r.sin(),
                    centre[1] + self.source_distance * r.cos(),
                    centre[2],
                ]
            })
            .collect();
        let spec = RoomSpec {
            dimensions: self.dimensions,
            t60,
            mics,
            sources,
            sample_rate: self.sample_rate,
            rir_length,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Image-source responses for every source/microphone pair, then mixing.
pub fn simulate(room: &RoomSpec, sources: &[Vec<f64>], max_order: Option<usize>, reference_mic: usize) -> Result<Mixture> {
    if sources.len() != room.sources.len() {
        return Err(Error::Config(format!(
            "room has {} source positions but {} signals were given",
            room.sources.len(),
            sources.len()
        )));
    }
    let rirs = all_rirs(room, max_order)?;
    convolve_mix(sources, &rirs, room.sample_rate, reference_mic)
}
