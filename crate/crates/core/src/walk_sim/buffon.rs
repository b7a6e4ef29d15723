//! Buffon's needle, the classical baseline: a needle no longer than the
//! line spacing crosses a line with probability `2 L / (pi d)`.

use std::f64::consts::PI;

use rand_core::RngCore;
use serde::Serialize;

use super::BitStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Needle {
    length: f64,
    spacing: f64,
}

impl Needle {
    /// Short needles only: `0 < length <= spacing`.
    pub fn new(length: f64, spacing: f64) -> Result<Self> {
        if !(length > 0.0 && length <= spacing && spacing.is_finite()) {
            return Err(Error::InvalidNeedle { len: length, spacing });
        }
        Ok(Self { length, spacing })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `2 L / (pi d)`.
    pub fn crossing_probability(&self) -> f64 {
        2.0 * self.length / (PI * self.spacing)
    }

    /// Center offset uniform on [0, d/2), angle uniform on [0, pi).
    pub fn drop_with<R: RngCore>(&self, bits: &mut BitStream<R>) -> NeedleDrop {
        let center_offset = bits.uniform53() * self.spacing / 2.0;
        let angle = bits.uniform53() * PI;
        NeedleDrop::place(self, center_offset, angle)
    }
}

/// A landed needle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeedleDrop {
    /// distance from the needle's center to the nearest line
    pub center_offset: f64,
    pub angle: f64,
    pub crossed: bool,
}

impl NeedleDrop {
    pub fn place(needle: &Needle, center_offset: f64, angle: f64) -> Self {
        let crossed = center_offset <= 0.5 * needle.length * angle.sin();
        Self {
            center_offset,
            angle,
            crossed,
        }
    }
}

pub fn buffon_trial<R: RngCore>(
    bits: &mut BitStream<R>,
    needle_len: f64,
    spacing: f64,
) -> Result<NeedleDrop> {
    Ok(Needle::new(needle_len, spacing)?.drop_with(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_edge_cases() {
        let needle = Needle::new(1.0, 1.0).unwrap();
        assert!(NeedleDrop::place(&needle, 0.0, 0.3).crossed);
        assert!(!NeedleDrop::place(&needle, 0.1, 0.0).crossed);
        assert!(NeedleDrop::place(&needle, 0.5, PI / 2.0).crossed);
        assert!(!NeedleDrop::place(&needle, 0.5, PI / 3.0).crossed);
    }

    #[test]
    fn rejects_long_or_degenerate_needles() {
        assert!(Needle::new(2.0, 1.0).is_err());
        assert!(Needle::new(0.0, 1.0).is_err());
        assert!(Needle::new(f64::NAN, 1.0).is_err());
        let mut bits = BitStream::substream(0, 0);
        assert_eq!(
            buffon_trial(&mut bits, 1.5, 1.0),
            Err(Error::InvalidNeedle { len: 1.5, spacing: 1.0 })
        );
    }

    #[test]
    fn drops_land_in_range() {
        let mut bits = BitStream::substream(3, 0);
        for _ in 0..1000 {
            let d = buffon_trial(&mut bits, 0.5, 2.0).unwrap();
            assert!((0.0..1.0).contains(&d.center_offset));
            assert!((0.0..PI).contains(&d.angle));
        }
    }

    #[test]
    fn short_needle_frequency() {
        let needle = Needle::new(0.5, 1.0).unwrap();
        let mut bits = BitStream::substream(4, 0);
        let n = 100_000;
        let hits = (0..n).filter(|_| needle.drop_with(&mut bits).crossed).count();
        let p = needle.crossing_probability();
        let freq = hits as f64 / n as f64;
        assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }
}
