//! Shoebox room impulse responses by the image-source method.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;
/// Upper clamp for the Sabine absorption coefficient.
pub const MAX_ALPHA: f64 = 0.99;

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    /// Room size in meters along x, y and z.
    pub dimensions: Point,
    /// Reverberation time in seconds; 0 means anechoic.
    pub t60: f64,
    pub mics: Vec<Point>,
    pub sources: Vec<Point>,
    pub sample_rate: u32,
    /// Impulse response length in samples; see [`RoomSpec::rir_len`] for the default.
    pub rir_length: Option<usize>,
}

impl RoomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput("room dimensions must be positive".into()));
        }
        if !(self.t60 >= 0.0) || !self.t60.is_finite() {
            return Err(Error::InvalidInput("T60 must be a nonnegative number of seconds".into()));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if self.rir_length == Some(0) {
            return Err(Error::InvalidInput("RIR length must be positive".into()));
        }
        for (what, pts) in [("microphone", &self.mics), ("source", &self.sources)] {
            for (i, p) in pts.iter().enumerate() {
                let inside = p
                    .iter()
                    .zip(&self.dimensions)
                    .all(|(c, d)| c.is_finite() && *c > 0.0 && c < d);
                if !inside {
                    return Err(Error::InvalidInput(format!(
                        "{what} {i} at {p:?} is not strictly inside the room"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        x * y * z
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + y * z + x * z)
    }

    /// `rir_length` if set, otherwise `1.2 * T60 * fs`, extended so every
    /// direct path fits.
    pub fn rir_len(&self) -> usize {
        if let Some(n) = self.rir_length {
            return n;
        }
        let fs = f64::from(self.sample_rate);
        let mut longest = 0.0f64;
        for s in &self.sources {
            for m in &self.mics {
                longest = longest.max(distance(s, m));
            }
        }
        let direct = (longest / SPEED_OF_SOUND * fs).ceil() as usize + 2;
        ((1.2 * self.t60 * fs).round() as usize).max(direct)
    }
}

fn distance(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Sabine absorption `0.161 V / (S T60)`, clamped to `0.99`; `T60 = 0` gives 1.
pub fn sabine_alpha(room: &RoomSpec) -> f64 {
    if room.t60 == 0.0 {
        return 1.0;
    }
    (0.161 * room.volume() / (room.surface() * room.t60)).min(MAX_ALPHA)
}

/// Impulse response from source `src` to microphone `mic`.
///
/// Each image contributes `beta^k / d` at delay `d / c * fs` samples, with
/// `beta = sqrt(1 - alpha)`, `k` the number of wall reflections and `d` the
/// image distance. Fractional delays use linear interpolation. `max_order`
/// caps `k`; `None` keeps every image that lands inside the response.
pub fn image_source_rir(room: &RoomSpec, src: usize, mic: usize, max_order: Option<usize>) -> Result<Vec<f64>> {
    room.validate()?;
    let s = *room
        .sources
        .get(src)
        .ok_or_else(|| Error::InvalidInput(format!("no source {src}")))?;
    let r = *room
        .mics
        .get(mic)
        .ok_or_else(|| Error::InvalidInput(format!("no microphone {mic}")))?;
    if distance(&s, &r) < 1e-9 {
        return Err(Error::InvalidInput(format!("source {src} and microphone {mic} are collocated")));
    }
    let len = room.rir_len();
    let fs = f64::from(room.sample_rate);
    let beta = (1.0 - sabine_alpha(room)).max(0.0).sqrt();
    let reach = len as f64 / fs * SPEED_OF_SOUND;
    let order_cap = max_order.unwrap_or(usize::MAX);
    let effective_cap = if beta == 0.0 { 0 } else { order_cap };

    let mut h = vec![0.0; len];
    let span: Vec<i64> = room
        .dimensions
        .iter()
        .map(|d| {
            let by_reach = (reach / (2.0 * d)).ceil() as i64 + 1;
            let by_order = i64::try_from(effective_cap / 2 + 1).unwrap_or(i64::MAX);
            by_reach.min(by_order)
        })
        .collect();

    for nx in -span[0]..=span[0] {
        for ny in -span[1]..=span[1] {
            for nz in -span[2]..=span[2] {
                let n = [nx, ny, nz];
                for q in 0..8u8 {
                    let mut img = [0.0; 3];
                    let mut order = 0u64;
                    for axis in 0..3 {
                        let qa = i64::from((q >> axis) & 1);
                        let sign = if qa == 1 { -1.0 } else { 1.0 };
                        img[axis] = sign * s[axis] + 2.0 * n[axis] as f64 * room.dimensions[axis];
                        order += (n[axis] - qa).unsigned_abs() + n[axis].unsigned_abs();
                    }
                    if order as u128 > effective_cap as u128 {
                        continue;
                    }
                    let d = distance(&img, &r);
                    let delay = d / SPEED_OF_SOUND * fs;
                    let i0 = delay.floor() as usize;
                    if i0 >= len {
                        continue;
                    }
                    let amp = beta.powi(order as i32) / d;
                    let frac = delay - i0 as f64;
                    h[i0] += amp * (1.0 - frac);
                    if i0 + 1 < len {
                        h[i0 + 1] += amp * frac;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Every response as `rirs[src][mic]`.
pub fn all_rirs(room: &RoomSpec, max_order: Option<usize>) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..room.sources.len())
        .map(|s| (0..room.mics.len()).map(|m| image_source_rir(room, s, m, max_order)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(t60: f64) -> RoomSpec {
        RoomSpec {
            dimensions: [8.0, 8.0, 3.0],
            t60,
            mics: vec![[4.0, 4.0, 1.5]],
            sources: vec![[5.0, 4.0, 1.5], [6.0, 4.0, 1.5]],
            sample_rate: 16000,
            rir_length: None,
        }
    }

    #[test]
    fn sabine_values() {
        let a = sabine_alpha(&room(0.3));
        assert!((a - 0.161 * 192.0 / (224.0 * 0.3)).abs() < 1e-15);
        assert!((a - 0.460).abs() < 1e-3);
        assert_eq!(sabine_alpha(&room(0.0)), 1.0);
        assert_eq!(sabine_alpha(&room(0.01)), MAX_ALPHA);
        let mut prev = 2.0;
        for i in 1..=12 {
            let a = sabine_alpha(&room(0.05 * i as f64));
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn direct_path_only() {
        let r = room(0.3);
        let h = image_source_rir(&r, 0, 0, Some(0)).unwrap();
        let delay = 1.0 / SPEED_OF_SOUND * 16000.0;
        let i0 = delay.floor() as usize;
        let frac = delay - i0 as f64;
        assert!((h[i0] - (1.0 - frac)).abs() < 1e-12);
        assert!((h[i0 + 1] - frac).abs() < 1e-12);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let anechoic = image_source_rir(&room(0.0), 0, 0, None).unwrap();
        assert_eq!(anechoic[..], h[..anechoic.len()]);
    }

    #[test]
    fn spreading_law() {
        let r = room(0.0);
        let near: f64 = image_source_rir(&r, 0, 0, None).unwrap().iter().sum();
        let far: f64 = image_source_rir(&r, 1, 0, None).unwrap().iter().sum();
        assert!((near / far - 2.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_count() {
        // Six first-order images, each with amplitude beta / d.
        let mut r = room(0.3);
        r.rir_length = Some(4000);
        let h0 = image_source_rir(&r, 0, 0, Some(0)).unwrap();
        let h1 = image_source_rir(&r, 0, 0, Some(1)).unwrap();
        let beta = (1.0 - sabine_alpha(&r)).sqrt();
        let (s, m) = (r.sources[0], r.mics[0]);
        let mut expected = 0.0;
        for axis in 0..3 {
            for wall in [0.0, r.dimensions[axis]] {
                let mut img = s;
                img[axis] = 2.0 * wall - s[axis];
                expected += beta / distance(&img, &m);
            }
        }
        let got: f64 = h1.iter().sum::<f64>() - h0.iter().sum::<f64>();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut r = room(0.3);
        r.sources[0] = [9.0, 1.0, 1.0];
        assert!(image_source_rir(&r, 0, 0, None).is_err());
        let mut r = room(0.3);
        r.sources[0] = r.mics[0];
        assert!(image_source_rir(&r, 0, 0, None).is_err());
        assert!(image_source_rir(&room(-1.0), 0, 0, None).is_err());
    }
}
