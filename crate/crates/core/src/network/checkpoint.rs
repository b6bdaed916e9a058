//! Binary checkpoints of a two-stage model and, optionally, its Adam state.
//!
//! All integers are little-endian `u64` unless noted, all reals little-endian
//! IEEE-754 `f64`, so a save/load round trip is bit-exact. Field order:
//!
//! | field | encoding |
//! |---|---|
//! | magic | 8 bytes `RNERFCKP` |
//! | format version | `u32`, currently 1 |
//! | ray_count, samples_per_ray | 2 x `u64` |
//! | t_near, t_far | 2 x `f64` |
//! | levels | `u64` |
//! | use_pe | `u8` (0 or 1) |
//! | tn_depth, tn_width, feature_dim, rn_width_1, rn_width_2 | 5 x `u64` |
//! | bounds min x,y,z then max x,y,z | 6 x `f64` |
//! | floor_eps | `f64` |
//! | target mean, target std | 2 x `f64` |
//! | parameter array count | `u64` |
//! | per array: element count, then elements | `u64` + `f64`s |
//! | has optimizer | `u8` |
//! | if set: step, then first moments, then second moments per array | `u64` + `f64`s |
//!
//! Parameter arrays follow [`Parameters::param_slices`]: stage 1 then stage 2,
//! and within a stage the TN layers, transmission head, feature head, RN
//! layers and signal head, each as row-major weights (`out x in`) then biases.

use std::fs;
use std::path::Path;

use super::{ModelConfig, ModelParams, NetworkShape, Parameters, RNerfModel};
use crate::autodiff::{OptimizerState, Regressor, TargetScaling};
use crate::encoding::{InputEncoding, SceneBounds};
use crate::error::{Error, Result};
use crate::geometry::{Point3, RayTracingConfig};

pub const MAGIC: &[u8; 8] = b"RNERFCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: RNerfModel,
    pub optimizer: Option<OptimizerState>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn array(&mut self, a: &[f64]) {
        self.usize(a.len());
        a.iter().for_each(|&v| self.f64(v));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Checkpoint(format!(
                    "truncated file: needed {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| Error::Checkpoint("size field out of range".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Checkpoint(format!("invalid flag byte {b}"))),
        }
    }
    fn point(&mut self) -> Result<Point3> {
        Ok(Point3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    fn array_into(&mut self, dst: &mut [f64], what: &str) -> Result<()> {
        let n = self.usize()?;
        if n != dst.len() {
            return Err(Error::Checkpoint(format!(
                "{what}: expected {} values, found {n}",
                dst.len()
            )));
        }
        for v in dst.iter_mut() {
            *v = self.f64()?;
        }
        Ok(())
    }
}

pub fn to_bytes(model: &RNerfModel, optimizer: Option<&OptimizerState>) -> Result<Vec<u8>> {
    if let Some(opt) = optimizer {
        if !opt.matches(&model.params) {
            return Err(Error::invalid(
                "optimizer state does not match model parameters",
            ));
        }
    }
    let c = model.config();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    w.usize(c.rays.ray_count);
    w.usize(c.rays.samples_per_ray);
    w.f64(c.rays.t_near);
    w.f64(c.rays.t_far);
    w.usize(c.encoding.levels);
    w.0.push(c.encoding.use_pe as u8);
    for v in [
        c.shape.tn_depth,
        c.shape.tn_width,
        c.shape.feature_dim,
        c.shape.rn_widths[0],
        c.shape.rn_widths[1],
    ] {
        w.usize(v);
    }
    for v in c
        .bounds
        .min_corner
        .to_array()
        .into_iter()
        .chain(c.bounds.max_corner.to_array())
    {
        w.f64(v);
    }
    w.f64(c.floor_eps);
    let s = model.scaling();
    w.f64(s.mean);
    w.f64(s.std);
    let slices = model.params.param_slices();
    w.usize(slices.len());
    slices.iter().for_each(|a| w.array(a));
    match optimizer {
        None => w.0.push(0),
        Some(opt) => {
            w.0.push(1);
            w.u64(opt.step);
            opt.first_moment.iter().for_each(|a| w.array(a));
            opt.second_moment.iter().for_each(|a| w.array(a));
        }
    }
    Ok(w.0)
}

pub fn from_bytes(buf: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint(
            "not a checkpoint file (bad magic)".into(),
        ));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let rays = RayTracingConfig::new(r.usize()?, r.usize()?, r.f64()?, r.f64()?)?;
    let levels = r.usize()?;
    let encoding = InputEncoding::new(levels, r.bool()?)?;
    let shape = NetworkShape {
        tn_depth: r.usize()?,
        tn_width: r.usize()?,
        feature_dim: r.usize()?,
        rn_widths: [r.usize()?, r.usize()?],
    };
    shape.validate()?;
    let bounds = SceneBounds::new(r.point()?, r.point()?)?;
    let mut config = ModelConfig::new(rays, encoding, shape, bounds);
    config.floor_eps = r.f64()?;
    let scaling = TargetScaling {
        mean: r.f64()?,
        std: r.f64()?,
    };

    let mut params = ModelParams::zeros(&shape, &encoding)?;
    let count = r.usize()?;
    {
        let mut slices = params.param_slices_mut();
        if count != slices.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter arrays, found {count}",
                slices.len()
            )));
        }
        for (i, s) in slices.iter_mut().enumerate() {
            r.array_into(s, &format!("parameter array {i}"))?;
        }
    }
    let optimizer = if r.bool()? {
        let mut opt = OptimizerState::for_params(&params);
        opt.step = r.u64()?;
        for (i, m) in opt.first_moment.iter_mut().enumerate() {
            r.array_into(m, &format!("first moment {i}"))?;
        }
        for (i, v) in opt.second_moment.iter_mut().enumerate() {
            r.array_into(v, &format!("second moment {i}"))?;
        }
        Some(opt)
    } else {
        None
    };
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            buf.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        model: RNerfModel::from_params(config, params, scaling)?,
        optimizer,
    })
}

pub fn save_checkpoint(
    path: &Path,
    model: &RNerfModel,
    optimizer: Option<&OptimizerState>,
) -> Result<()> {
    fs::write(path, to_bytes(model, optimizer)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    from_bytes(&fs::read(path)?)
}
