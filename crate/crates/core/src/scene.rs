//! Synthetic ground truth: an element-wise RIS link model, dataset generation,
//! the dataset text format and seeded train/test splits.
//!
//! The oracle sums, over every RIS element `e`,
//! `(rho/d1) e^{i 2 pi xi d1 / lambda} * e^{i phi_e} * (rho/d2) e^{i 2 pi xi d2 / lambda}`
//! where `d1`, `d2` are the TX-element and element-RX distances and `phi_e` is
//! the element's configured phase shift. It stands in for a full
//! electromagnetic RIS simulator.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::encoding::SceneBounds;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::radiometry::{amplitude_db, analytic_transmission, RadioConstants, DEFAULT_FLOOR_EPS};

/// TX, RIS and RX positions of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub tx: Point3,
    pub ris: Point3,
    pub rx: Point3,
}

/// One labeled example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSample {
    pub tx: Point3,
    pub ris: Point3,
    pub rx: Point3,
    /// Received strength in dB.
    pub strength: f64,
}

impl SceneSample {
    pub fn placement(&self) -> Placement {
        Placement {
            tx: self.tx,
            ris: self.ris,
            rx: self.rx,
        }
    }
}

/// Per-element phase shifts programmed into the RIS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseProfile {
    /// Every element at phase 0.
    Specular,
    /// Phases that align all element paths at the given point.
    Focus(Point3),
    /// Focus at a point fixed relative to the RIS center, so the beam moves with the panel.
    PanelFocus(Point3),
    /// Uniform phases in `[0, 2 pi)` drawn from the seed.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub constants: RadioConstants,
    pub rows: usize,
    pub cols: usize,
    /// Element pitch in meters.
    pub element_spacing: f64,
    pub profile: PhaseProfile,
    pub noise_std_db: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let constants = RadioConstants::default();
        Self {
            element_spacing: constants.wavelength / 2.0,
            constants,
            rows: 8,
            cols: 8,
            profile: PhaseProfile::PanelFocus(SceneLayout::default().panel_focus_offset()),
            noise_std_db: 0.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("RIS grid must be at least 1x1"));
        }
        if !(self.element_spacing.is_finite() && self.element_spacing > 0.0) {
            return Err(Error::invalid("element_spacing must be > 0"));
        }
        if !(self.noise_std_db.is_finite() && self.noise_std_db >= 0.0) {
            return Err(Error::invalid("noise_std_db must be >= 0"));
        }
        Ok(())
    }

    /// Element centers of a RIS centered at `ris`, laid out in its local x-z plane.
    pub fn element_positions(&self, ris: Point3) -> Vec<Point3> {
        let r0 = (self.rows as f64 - 1.0) / 2.0;
        let c0 = (self.cols as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(Point3::new(
                    ris.x + (r as f64 - r0) * self.element_spacing,
                    ris.y,
                    ris.z + (c as f64 - c0) * self.element_spacing,
                ));
            }
        }
        out
    }

    /// Absolute focal point for a RIS centered at `ris`, if the profile focuses.
    pub fn focal_point(&self, ris: Point3) -> Option<Point3> {
        match self.profile {
            PhaseProfile::Focus(p) => Some(p),
            PhaseProfile::PanelFocus(offset) => Some(ris + offset),
            _ => None,
        }
    }

    fn element_phases(&self, tx: Point3, ris: Point3, elements: &[Point3]) -> Result<Vec<f64>> {
        let k = 2.0 * PI * self.constants.phase_coefficient / self.constants.wavelength;
        match self.profile {
            PhaseProfile::Specular => Ok(vec![0.0; elements.len()]),
            PhaseProfile::Focus(_) | PhaseProfile::PanelFocus(_) => {
                let focal = self.focal_point(ris).expect("focus profile");
                elements
                    .iter()
                    .map(|e| {
                        let d = e.distance(&tx) + e.distance(&focal);
                        if d > 0.0 {
                            Ok(-k * d)
                        } else {
                            Err(Error::invalid("focal point coincides with a RIS element"))
                        }
                    })
                    .collect()
            }
            PhaseProfile::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(elements
                    .iter()
                    .map(|_| rng.random_range(0.0..2.0 * PI))
                    .collect())
            }
        }
    }
}

/// Noise-free received phasor summed over every RIS element.
pub fn oracle_signal(tx: Point3, ris: Point3, rx: Point3, cfg: &OracleConfig) -> Result<Complex64> {
    cfg.validate()?;
    for p in [tx, ris, rx] {
        if !p.is_finite() {
            return Err(Error::invalid("non-finite position"));
        }
    }
    if tx == ris || ris == rx {
        return Err(Error::invalid("TX, RIS and RX must not coincide"));
    }
    let elements = cfg.element_positions(ris);
    let phases = cfg.element_phases(tx, ris, &elements)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (e, phi) in elements.iter().zip(phases) {
        let leg1 = analytic_transmission(e.distance(&tx), &cfg.constants)
            .map_err(|_| Error::invalid("TX coincides with a RIS element"))?;
        let leg2 = analytic_transmission(e.distance(&rx), &cfg.constants)
            .map_err(|_| Error::invalid("RX coincides with a RIS element"))?;
        sum += Complex64::from_polar(
            leg1.amplitude * leg2.amplitude,
            leg1.phase + phi + leg2.phase,
        );
    }
    Ok(sum)
}

/// Noise-free strength in dB.
pub fn oracle_clean_strength(
    tx: Point3,
    ris: Point3,
    rx: Point3,
    cfg: &OracleConfig,
) -> Result<f64> {
    Ok(amplitude_db(
        oracle_signal(tx, ris, rx, cfg)?.norm(),
        DEFAULT_FLOOR_EPS,
    ))
}

/// Strength in dB plus zero-mean Gaussian noise of `cfg.noise_std_db` drawn from `rng`.
pub fn oracle_strength<R: Rng + ?Sized>(
    tx: Point3,
    ris: Point3,
    rx: Point3,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<f64> {
    let clean = oracle_clean_strength(tx, ris, rx, cfg)?;
    if cfg.noise_std_db == 0.0 {
        return Ok(clean);
    }
    let noise = Normal::new(0.0, cfg.noise_std_db).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(clean + noise.sample(rng))
}

/// Axis-aligned sampling region; unlike [`SceneBounds`] an axis may have zero extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Point3,
    pub max: Point3,
}

impl Region {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        let ok = min.is_finite()
            && max.is_finite()
            && min.x <= max.x
            && min.y <= max.y
            && min.z <= max.z;
        if !ok {
            return Err(Error::invalid(
                "region min corner must not exceed max corner",
            ));
        }
        Ok(Self { min, max })
    }

    pub fn center(&self) -> Point3 {
        self.min.midpoint(&self.max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        let mut axis = |lo: f64, hi: f64| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        Point3::new(
            axis(self.min.x, self.max.x),
            axis(self.min.y, self.max.y),
            axis(self.min.z, self.max.z),
        )
    }
}

/// How RIS positions are chosen per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum RisPlacement {
    /// `count` fixed candidates drawn once from the region, then chosen uniformly per sample.
    Candidates { region: Region, count: usize },
    /// An explicit candidate list.
    Fixed(Vec<Point3>),
    /// A fresh uniform position per sample.
    Continuous(Region),
}

/// Scene geometry: a fixed TX, the RIS placement rule and the RX sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayout {
    pub tx: Point3,
    pub ris: RisPlacement,
    pub rx_box: Region,
}

impl Default for SceneLayout {
    /// TX at (1.5, -1.5, 0); RIS in the y = 0 plane within [-0.8, 0.8] on x and z
    /// (8 candidates); RX in [1, 2.5] x [5, 7] x [-1.5, 1.5].
    fn default() -> Self {
        Self {
            tx: Point3::new(1.5, -1.5, 0.0),
            ris: RisPlacement::Candidates {
                region: Region {
                    min: Point3::new(-0.8, 0.0, -0.8),
                    max: Point3::new(0.8, 0.0, 0.8),
                },
                count: 8,
            },
            rx_box: Region {
                min: Point3::new(1.0, 5.0, -1.5),
                max: Point3::new(2.5, 7.0, 1.5),
            },
        }
    }
}

impl SceneLayout {
    fn ris_extent(&self) -> Vec<Point3> {
        match &self.ris {
            RisPlacement::Candidates { region, .. } | RisPlacement::Continuous(region) => {
                vec![region.min, region.max]
            }
            RisPlacement::Fixed(points) => points.clone(),
        }
    }

    /// Center of the region the RIS is placed in.
    pub fn ris_center(&self) -> Point3 {
        match &self.ris {
            RisPlacement::Candidates { region, .. } | RisPlacement::Continuous(region) => {
                region.center()
            }
            RisPlacement::Fixed(points) => {
                points
                    .iter()
                    .fold(Point3::new(0.0, 0.0, 0.0), |acc, &p| acc + p)
                    * (1.0 / points.len().max(1) as f64)
            }
        }
    }

    /// Offset that points a panel-relative beam at the RX box center from the
    /// middle of the RIS region.
    pub fn panel_focus_offset(&self) -> Point3 {
        self.rx_box.center() - self.ris_center()
    }

    /// Smallest box holding the TX, every possible RIS position and the RX box.
    pub fn bounds(&self) -> Result<SceneBounds> {
        let mut pts = vec![self.tx, self.rx_box.min, self.rx_box.max];
        pts.extend(self.ris_extent());
        SceneBounds::enclosing(&pts)
    }

    /// RIS candidates actually used for a given dataset seed.
    pub fn ris_candidates(&self, seed: u64) -> Vec<Point3> {
        match &self.ris {
            RisPlacement::Candidates { region, count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5249_535f_4341_4e44);
                (0..*count).map(|_| region.sample(&mut rng)).collect()
            }
            RisPlacement::Fixed(points) => points.clone(),
            RisPlacement::Continuous(_) => Vec::new(),
        }
    }
}

/// Labeled samples with uniform RX positions; deterministic in `seed`.
pub fn generate_dataset(
    layout: &SceneLayout,
    count: usize,
    cfg: &OracleConfig,
    seed: u64,
) -> Result<Vec<SceneSample>> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::invalid("dataset count must be >= 1"));
    }
    let candidates = layout.ris_candidates(seed);
    if matches!(
        layout.ris,
        RisPlacement::Candidates { .. } | RisPlacement::Fixed(_)
    ) && candidates.is_empty()
    {
        return Err(Error::invalid("RIS placement has no candidates"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let ris = match &layout.ris {
            RisPlacement::Continuous(region) => region.sample(&mut rng),
            _ => *candidates.choose(&mut rng).expect("non-empty"),
        };
        let rx = layout.rx_box.sample(&mut rng);
        let strength = oracle_strength(layout.tx, ris, rx, cfg, &mut noise_rng)?;
        out.push(SceneSample {
            tx: layout.tx,
            ris,
            rx,
            strength,
        });
    }
    Ok(out)
}

pub const DATASET_HEADER: &str = "tx_x,tx_y,tx_z,ris_x,ris_y,ris_z,rx_x,rx_y,rx_z,rss_db";

/// Writes the comma-separated dataset format with shortest round-trip decimals.
pub fn save_dataset(samples: &[SceneSample], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_dataset(samples, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset<W: Write>(samples: &[SceneSample], w: &mut W) -> Result<()> {
    writeln!(w, "{DATASET_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            s.tx.x, s.tx.y, s.tx.z, s.ris.x, s.ris.y, s.ris.z, s.rx.x, s.rx.y, s.rx.z, s.strength
        )?;
    }
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<SceneSample>> {
    let text = fs::read_to_string(path)?;
    parse_dataset(&text, path)
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<SceneSample>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    match lines.next() {
        None | Some("") => return Err(err(1, "empty dataset file".into())),
        Some(h) if h != DATASET_HEADER => {
            return Err(err(
                1,
                format!("unexpected header {h:?}, expected {DATASET_HEADER:?}"),
            ))
        }
        Some(_) => {}
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(err(
                lineno,
                format!("expected 10 fields, found {}", fields.len()),
            ));
        }
        let mut v = [0.0; 10];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    err(
                        lineno,
                        format!("field {} is not a finite number: {f:?}", k + 1),
                    )
                })?;
        }
        out.push(SceneSample {
            tx: Point3::new(v[0], v[1], v[2]),
            ris: Point3::new(v[3], v[4], v[5]),
            rx: Point3::new(v[6], v[7], v[8]),
            strength: v[9],
        });
    }
    if out.is_empty() {
        return Err(err(2, "dataset has no rows".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSplit {
    pub train_fraction: f64,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train_fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(Self {
            train_fraction,
            seed,
        })
    }
}

/// Seeded shuffle, then the first `round(fraction * n)` samples train.
pub fn split_dataset(
    samples: &[SceneSample],
    split: &DatasetSplit,
) -> Result<(Vec<SceneSample>, Vec<SceneSample>)> {
    DatasetSplit::new(split.train_fraction, split.seed)?;
    if samples.len() < 2 {
        return Err(Error::invalid("splitting needs at least 2 samples"));
    }
    let n_train = (samples.len() as f64 * split.train_fraction).round() as usize;
    if n_train == 0 || n_train == samples.len() {
        return Err(Error::invalid(format!(
            "train fraction {} leaves an empty side for {} samples",
            split.train_fraction,
            samples.len()
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split.seed));
    let train = order[..n_train].iter().map(|&i| samples[i]).collect();
    let test = order[n_train..].iter().map(|&i| samples[i]).collect();
    Ok((train, test))
}
