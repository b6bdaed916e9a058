//! Rays, direction lattices and voxel sampling along rays.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Unit-length direction vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction3 {
    dx: f64,
    dy: f64,
    dz: f64,
}

const UNIT_TOLERANCE: f64 = 1e-9;

impl Direction3 {
    /// Accepts components that already form a unit vector.
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!(
                "direction ({dx}, {dy}, {dz}) is not unit length (norm {norm})"
            )));
        }
        Ok(Self { dx, dy, dz })
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn from_vector(v: Point3) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid(format!(
                "cannot normalize vector ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        Ok(Self {
            dx: v.x / norm,
            dy: v.y / norm,
            dz: v.z / norm,
        })
    }

    /// Unit direction from `from` toward `to`.
    pub fn between(from: Point3, to: Point3) -> Result<Self> {
        Self::from_vector(to - from)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn as_vector(self) -> Point3 {
        Point3::new(self.dx, self.dy, self.dz)
    }

    pub fn dot(&self, other: &Direction3) -> f64 {
        self.dx * other.dx + self.dy * other.dy + self.dz * other.dz
    }
}

/// Ray count and sampling interval for one rendering origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayTracingConfig {
    pub ray_count: usize,
    pub samples_per_ray: usize,
    pub t_near: f64,
    pub t_far: f64,
}

impl RayTracingConfig {
    pub const DEFAULT_RAY_COUNT: usize = 36;
    pub const DEFAULT_SAMPLES_PER_RAY: usize = 16;

    pub fn new(ray_count: usize, samples_per_ray: usize, t_near: f64, t_far: f64) -> Result<Self> {
        let cfg = Self {
            ray_count,
            samples_per_ray,
            t_near,
            t_far,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default ray and sample counts over `[0, t_far]`.
    pub fn with_far(t_far: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_RAY_COUNT,
            Self::DEFAULT_SAMPLES_PER_RAY,
            0.0,
            t_far,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.ray_count == 0 {
            return Err(Error::invalid("ray_count must be at least 1"));
        }
        if self.samples_per_ray == 0 {
            return Err(Error::invalid("samples_per_ray must be at least 1"));
        }
        if !(self.t_near.is_finite() && self.t_near >= 0.0) {
            return Err(Error::invalid(format!(
                "t_near must be >= 0, got {}",
                self.t_near
            )));
        }
        if !(self.t_far.is_finite() && self.t_far > self.t_near) {
            return Err(Error::invalid(format!(
                "t_far ({}) must exceed t_near ({})",
                self.t_far, self.t_near
            )));
        }
        Ok(())
    }

    pub fn voxels_per_bundle(&self) -> usize {
        self.ray_count * self.samples_per_ray
    }

    /// Stratified midpoints `t_near + (n + 0.5) * (t_far - t_near) / N`.
    pub fn sample_distances(&self) -> Vec<f64> {
        let step = (self.t_far - self.t_near) / self.samples_per_ray as f64;
        (0..self.samples_per_ray)
            .map(|n| self.t_near + (n as f64 + 0.5) * step)
            .collect()
    }
}

/// `origin + t * dir`, component-wise.
pub fn point_on_ray(origin: Point3, dir: Direction3, t: f64) -> Result<Point3> {
    if !origin.is_finite() || !t.is_finite() {
        return Err(Error::invalid("non-finite ray origin or distance"));
    }
    if t < 0.0 {
        return Err(Error::invalid(format!(
            "ray distance must be >= 0, got {t}"
        )));
    }
    Ok(ray_point(origin, dir, t))
}

#[inline]
fn ray_point(origin: Point3, dir: Direction3, t: f64) -> Point3 {
    Point3::new(
        origin.x + t * dir.dx,
        origin.y + t * dir.dy,
        origin.z + t * dir.dz,
    )
}

/// Deterministic Fibonacci-sphere lattice of `count` unit directions.
pub fn uniform_directions(count: usize) -> Result<Vec<Direction3>> {
    if count == 0 {
        return Err(Error::invalid("direction count must be at least 1"));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let m = count as f64;
    Ok((0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = golden_angle * i as f64;
            let (s, c) = theta.sin_cos();
            Direction3::from_vector(Point3::new(r * c, r * s, z))
                .expect("lattice points are non-zero")
        })
        .collect())
}

/// M rays of N voxels from one origin, stored row-major by ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayBundle {
    origin: Point3,
    directions: Vec<Direction3>,
    samples_per_ray: usize,
    voxels: Vec<Point3>,
    distances: Vec<f64>,
}

impl RayBundle {
    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn directions(&self) -> &[Direction3] {
        &self.directions
    }

    pub fn ray_count(&self) -> usize {
        self.directions.len()
    }

    pub fn samples_per_ray(&self) -> usize {
        self.samples_per_ray
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn voxel(&self, ray: usize, sample: usize) -> Point3 {
        self.voxels[ray * self.samples_per_ray + sample]
    }

    pub fn distance(&self, ray: usize, sample: usize) -> f64 {
        self.distances[ray * self.samples_per_ray + sample]
    }

    /// All voxels, ray-major.
    pub fn voxels(&self) -> &[Point3] {
        &self.voxels
    }

    /// Per-voxel distances, ray-major.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Iterates `(ray index, direction, voxel, distance)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Direction3, Point3, f64)> + '_ {
        self.voxels
            .iter()
            .zip(&self.distances)
            .enumerate()
            .map(move |(k, (&v, &t))| {
                let m = k / self.samples_per_ray;
                (m, self.directions[m], v, t)
            })
    }
}

/// Samples a bundle along the Fibonacci lattice directions.
pub fn build_ray_bundle(origin: Point3, cfg: &RayTracingConfig) -> Result<RayBundle> {
    cfg.validate()?;
    let directions = uniform_directions(cfg.ray_count)?;
    build_ray_bundle_with(origin, directions, cfg)
}

/// Samples a bundle along caller-supplied directions; `cfg.ray_count` is ignored.
pub fn build_ray_bundle_with(
    origin: Point3,
    directions: Vec<Direction3>,
    cfg: &RayTracingConfig,
) -> Result<RayBundle> {
    cfg.validate()?;
    if directions.is_empty() {
        return Err(Error::invalid("ray bundle needs at least one direction"));
    }
    if !origin.is_finite() {
        return Err(Error::invalid("non-finite ray origin"));
    }
    let ts = cfg.sample_distances();
    let mut voxels = Vec::with_capacity(directions.len() * ts.len());
    let mut distances = Vec::with_capacity(directions.len() * ts.len());
    for dir in &directions {
        for &t in &ts {
            voxels.push(ray_point(origin, *dir, t));
            distances.push(t);
        }
    }
    Ok(RayBundle {
        origin,
        directions,
        samples_per_ray: cfg.samples_per_ray,
        voxels,
        distances,
    })
}

/// Origin-independent part of a bundle: the `t * dir` offsets shared by every origin.
///
/// `RayTemplate::place(origin)` reproduces `build_ray_bundle` voxel-for-voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTemplate {
    cfg: RayTracingConfig,
    directions: Vec<Direction3>,
    distances: Vec<f64>,
}

impl RayTemplate {
    pub fn new(cfg: &RayTracingConfig) -> Result<Self> {
        cfg.validate()?;
        let directions = uniform_directions(cfg.ray_count)?;
        let ts = cfg.sample_distances();
        let distances = directions.iter().flat_map(|_| ts.iter().copied()).collect();
        Ok(Self {
            cfg: *cfg,
            directions,
            distances,
        })
    }

    pub fn config(&self) -> &RayTracingConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn direction_of(&self, k: usize) -> Direction3 {
        self.directions[k / self.cfg.samples_per_ray]
    }

    pub fn voxel(&self, origin: Point3, k: usize) -> Point3 {
        ray_point(origin, self.direction_of(k), self.distances[k])
    }

    pub fn place(&self, origin: Point3) -> RayBundle {
        RayBundle {
            origin,
            directions: self.directions.clone(),
            samples_per_ray: self.cfg.samples_per_ray,
            voxels: (0..self.len()).map(|k| self.voxel(origin, k)).collect(),
            distances: self.distances.clone(),
        }
    }
}
