//! Coordinate normalization and Fourier positional encoding.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Direction3, Point3};

/// Number of frequency levels `L` and whether raw components are prepended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingConfig {
    pub levels: usize,
    pub include_raw: bool,
}

impl EncodingConfig {
    pub fn new(levels: usize, include_raw: bool) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid(
                "encoding needs at least one frequency level",
            ));
        }
        Ok(Self {
            levels,
            include_raw,
        })
    }

    /// `dim * 2L`, plus `dim` when raw components are kept.
    pub fn output_len(&self, dim: usize) -> usize {
        dim * 2 * self.levels + if self.include_raw { dim } else { 0 }
    }
}

/// Axis-aligned box used to map scene coordinates into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBounds {
    pub min_corner: Point3,
    pub max_corner: Point3,
}

impl SceneBounds {
    pub fn new(min_corner: Point3, max_corner: Point3) -> Result<Self> {
        let b = Self {
            min_corner,
            max_corner,
        };
        b.validate()?;
        Ok(b)
    }

    /// Smallest box containing every point.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Result<Self> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for (k, c) in p.to_array().into_iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        Self::new(lo.into(), hi.into())
    }

    pub fn validate(&self) -> Result<()> {
        let lo = self.min_corner.to_array();
        let hi = self.max_corner.to_array();
        for axis in 0..3 {
            if !(lo[axis].is_finite() && hi[axis].is_finite() && lo[axis] < hi[axis]) {
                return Err(Error::invalid(format!(
                    "degenerate scene bounds on axis {axis}: [{}, {}]",
                    lo[axis], hi[axis]
                )));
            }
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        self.min_corner.distance(&self.max_corner)
    }

    pub fn center(&self) -> Point3 {
        self.min_corner.midpoint(&self.max_corner)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        let lo = self.min_corner.to_array();
        let hi = self.max_corner.to_array();
        p.to_array()
            .iter()
            .enumerate()
            .all(|(k, &c)| c >= lo[k] && c <= hi[k])
    }

    #[inline]
    pub(crate) fn normalize_unchecked(&self, p: Point3) -> [f64; 3] {
        let lo = self.min_corner.to_array();
        let hi = self.max_corner.to_array();
        let c = p.to_array();
        std::array::from_fn(|k| 2.0 * (c[k] - lo[k]) / (hi[k] - lo[k]) - 1.0)
    }
}

/// Affine map of each axis onto `[-1, 1]`; points outside the box are not clamped.
pub fn normalize(p: Point3, bounds: &SceneBounds) -> Result<Point3> {
    bounds.validate()?;
    Ok(bounds.normalize_unchecked(p).into())
}

/// `(sin(2^k pi x), cos(2^k pi x))` for `k < L`, per component, optionally after the raw values.
pub fn positional_encode(v: &[f64], cfg: &EncodingConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.output_len(v.len())];
    encode_into(v, cfg.levels, cfg.include_raw, &mut out);
    out
}

pub(crate) fn encode_into(v: &[f64], levels: usize, include_raw: bool, out: &mut [f64]) {
    let mut k = 0;
    if include_raw {
        out[..v.len()].copy_from_slice(v);
        k = v.len();
    }
    for &x in v {
        let mut freq = PI;
        for _ in 0..levels {
            let (s, c) = (freq * x).sin_cos();
            out[k] = s;
            out[k + 1] = c;
            k += 2;
            freq *= 2.0;
        }
    }
}

/// How scene coordinates and directions become network inputs.
///
/// With positional encoding enabled, positions keep their raw normalized
/// coordinates and gain `6L` Fourier terms (`6L + 3` values), while directions
/// contribute only their `6L` Fourier terms. Disabled, both are passed raw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputEncoding {
    pub levels: usize,
    pub use_pe: bool,
}

impl Default for InputEncoding {
    fn default() -> Self {
        Self {
            levels: 10,
            use_pe: true,
        }
    }
}

impl InputEncoding {
    pub fn new(levels: usize, use_pe: bool) -> Result<Self> {
        if use_pe && levels == 0 {
            return Err(Error::invalid("positional encoding needs levels >= 1"));
        }
        Ok(Self { levels, use_pe })
    }

    pub fn position_len(&self) -> usize {
        if self.use_pe {
            6 * self.levels + 3
        } else {
            3
        }
    }

    pub fn direction_len(&self) -> usize {
        if self.use_pe {
            6 * self.levels
        } else {
            3
        }
    }

    /// Encodes an already-normalized position.
    pub fn encode_position(&self, normalized: [f64; 3], out: &mut [f64]) {
        if self.use_pe {
            encode_into(&normalized, self.levels, true, out);
        } else {
            out[..3].copy_from_slice(&normalized);
        }
    }

    pub fn encode_direction(&self, dir: Direction3, out: &mut [f64]) {
        let d = dir.to_array();
        if self.use_pe {
            encode_into(&d, self.levels, false, out);
        } else {
            out[..3].copy_from_slice(&d);
        }
    }
}
