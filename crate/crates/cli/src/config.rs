//! Run configuration: a flat `key = value` file with dotted section prefixes.
//!
//! Blank lines and `#` comments are ignored. Points are written `x, y, z`.
//! Every key is optional; see [`KEYS`] for the full schema and the README for
//! defaults. Unknown or repeated keys are errors.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rnerf_core::autodiff::TrainConfig;
use rnerf_core::encoding::{InputEncoding, SceneBounds};
use rnerf_core::geometry::{Point3, RayTracingConfig};
use rnerf_core::network::{ModelConfig, NetworkShape};
use rnerf_core::radiometry::RadioConstants;
use rnerf_core::scene::{
    DatasetSplit, OracleConfig, PhaseProfile, Region, RisPlacement, SceneLayout,
};

use crate::error::CliError;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("rays.count", "rays per bundle (M)"),
    ("rays.samples", "samples per ray (N)"),
    ("rays.t_near", "first sample interval start in meters"),
    ("rays.t_far", "sample interval end in meters; defaults to the scene diagonal"),
    ("encoding.levels", "positional-encoding frequency levels (L)"),
    ("encoding.use_pe", "true for Fourier features, false for raw coordinates"),
    ("network.tn_depth", "transmission-network hidden layers"),
    ("network.tn_width", "transmission-network width"),
    ("network.feature_dim", "feature vector width"),
    ("network.rn_width1", "first radiation-network layer width"),
    ("network.rn_width2", "second radiation-network layer width"),
    ("radio.rho", "amplitude coefficient"),
    ("radio.xi", "phase coefficient"),
    ("radio.wavelength", "carrier wavelength in meters"),
    ("oracle.rows", "RIS element rows"),
    ("oracle.cols", "RIS element columns"),
    ("oracle.spacing", "RIS element pitch in meters; defaults to half a wavelength"),
    ("oracle.profile", "panel_focus (default), focus, specular or random"),
    ("oracle.focus", "focal point for the focus profile; defaults to the RX box center"),
    ("oracle.focus_offset", "focal point relative to the RIS for panel_focus; defaults to RX box center minus RIS region center"),
    ("oracle.random_seed", "seed of the random profile"),
    ("oracle.noise_std_db", "Gaussian label noise in dB"),
    ("scene.tx", "transmitter position"),
    ("scene.rx_min", "RX sampling box min corner"),
    ("scene.rx_max", "RX sampling box max corner"),
    ("scene.ris_min", "RIS region min corner"),
    ("scene.ris_max", "RIS region max corner"),
    ("scene.ris_candidates", "number of fixed RIS candidates; 0 samples the region continuously"),
    ("bounds.min", "normalization box min corner; defaults to the scene's enclosing box"),
    ("bounds.max", "normalization box max corner"),
    ("train.learning_rate", "Adam learning rate"),
    ("train.batch_size", "minibatch size"),
    ("train.epochs", "maximum epochs"),
    ("train.seed", "shuffle and validation-split seed"),
    ("train.init_seed", "parameter initialization seed"),
    ("train.adam_beta1", "Adam first-moment decay"),
    ("train.adam_beta2", "Adam second-moment decay"),
    ("train.adam_eps", "Adam epsilon"),
    ("train.patience", "early-stopping patience in epochs"),
    ("train.validation_fraction", "share of training data held out for early stopping"),
    ("split.train_fraction", "train share of the dataset"),
    ("split.seed", "train/test split seed"),
    ("data.count", "samples generated by gen-data"),
    ("data.seed", "gen-data seed"),
    ("paths.data", "default dataset path"),
    ("paths.checkpoint", "default checkpoint path"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rays: RayTracingConfig,
    pub encoding: InputEncoding,
    pub shape: NetworkShape,
    pub oracle: OracleConfig,
    pub layout: SceneLayout,
    pub bounds: SceneBounds,
    pub train: TrainConfig,
    pub init_seed: u64,
    pub split: DatasetSplit,
    pub data_count: usize,
    pub data_seed: u64,
    pub data_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::parse_str("", Path::new("<default>")).expect("defaults are valid")
    }
}

fn point(key: &str, v: &str) -> Result<Point3, CliError> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config_value(key, v, "expected three comma-separated numbers"))?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|c| c.is_finite()) => Ok(Point3::new(x, y, z)),
        _ => Err(CliError::config_value(
            key,
            v,
            "expected three comma-separated numbers",
        )),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::config_value(key, v, "not a valid number"))
}

fn flag(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::config_value(key, v, "expected true or false")),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, path)
    }

    pub fn parse_str(text: &str, origin: &Path) -> Result<Self, CliError> {
        let layout = SceneLayout::default();
        let (mut ris_min, mut ris_max, mut candidates) = match layout.ris {
            RisPlacement::Candidates { region, count } => (region.min, region.max, count),
            _ => unreachable!("default layout uses candidates"),
        };
        let (mut tx, mut rx_min, mut rx_max) = (layout.tx, layout.rx_box.min, layout.rx_box.max);
        let mut rays = RayTracingConfig {
            ray_count: RayTracingConfig::DEFAULT_RAY_COUNT,
            samples_per_ray: RayTracingConfig::DEFAULT_SAMPLES_PER_RAY,
            t_near: 0.0,
            t_far: f64::NAN,
        };
        let mut encoding = InputEncoding::default();
        let mut shape = NetworkShape::default();
        let mut radio = RadioConstants::default();
        let defaults = OracleConfig::default();
        let (mut rows, mut cols, mut spacing) = (defaults.rows, defaults.cols, None);
        let (mut profile, mut focus, mut random_seed) = ("panel_focus".to_string(), None, 0u64);
        let mut focus_offset = None;
        let mut noise = defaults.noise_std_db;
        let (mut bounds_min, mut bounds_max) = (None, None);
        let mut train = TrainConfig::default();
        let mut init_seed = 0;
        let (mut split_fraction, mut split_seed) = (0.8, 0);
        let (mut data_count, mut data_seed) = (5000, 0);
        let (mut data_path, mut checkpoint_path) = (None, None);

        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`, found {line:?}",
                    origin.display(),
                    i + 1
                )));
            };
            let (key, v) = (key.trim(), value.trim());
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown configuration key `{key}`",
                    origin.display(),
                    i + 1
                )));
            }
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!(
                    "{}:{}: configuration key `{key}` given twice",
                    origin.display(),
                    i + 1
                )));
            }
            match key {
                "rays.count" => rays.ray_count = num(key, v)?,
                "rays.samples" => rays.samples_per_ray = num(key, v)?,
                "rays.t_near" => rays.t_near = num(key, v)?,
                "rays.t_far" => rays.t_far = num(key, v)?,
                "encoding.levels" => encoding.levels = num(key, v)?,
                "encoding.use_pe" => encoding.use_pe = flag(key, v)?,
                "network.tn_depth" => shape.tn_depth = num(key, v)?,
                "network.tn_width" => shape.tn_width = num(key, v)?,
                "network.feature_dim" => shape.feature_dim = num(key, v)?,
                "network.rn_width1" => shape.rn_widths[0] = num(key, v)?,
                "network.rn_width2" => shape.rn_widths[1] = num(key, v)?,
                "radio.rho" => radio.amplitude_coefficient = num(key, v)?,
                "radio.xi" => radio.phase_coefficient = num(key, v)?,
                "radio.wavelength" => radio.wavelength = num(key, v)?,
                "oracle.rows" => rows = num(key, v)?,
                "oracle.cols" => cols = num(key, v)?,
                "oracle.spacing" => spacing = Some(num(key, v)?),
                "oracle.profile" => profile = v.to_string(),
                "oracle.focus" => focus = Some(point(key, v)?),
                "oracle.focus_offset" => focus_offset = Some(point(key, v)?),
                "oracle.random_seed" => random_seed = num(key, v)?,
                "oracle.noise_std_db" => noise = num(key, v)?,
                "scene.tx" => tx = point(key, v)?,
                "scene.rx_min" => rx_min = point(key, v)?,
                "scene.rx_max" => rx_max = point(key, v)?,
                "scene.ris_min" => ris_min = point(key, v)?,
                "scene.ris_max" => ris_max = point(key, v)?,
                "scene.ris_candidates" => candidates = num(key, v)?,
                "bounds.min" => bounds_min = Some(point(key, v)?),
                "bounds.max" => bounds_max = Some(point(key, v)?),
                "train.learning_rate" => train.learning_rate = num(key, v)?,
                "train.batch_size" => train.batch_size = num(key, v)?,
                "train.epochs" => train.epochs = num(key, v)?,
                "train.seed" => train.seed = num(key, v)?,
                "train.init_seed" => init_seed = num(key, v)?,
                "train.adam_beta1" => train.adam_beta1 = num(key, v)?,
                "train.adam_beta2" => train.adam_beta2 = num(key, v)?,
                "train.adam_eps" => train.adam_eps = num(key, v)?,
                "train.patience" => train.patience = num(key, v)?,
                "train.validation_fraction" => train.validation_fraction = num(key, v)?,
                "split.train_fraction" => split_fraction = num(key, v)?,
                "split.seed" => split_seed = num(key, v)?,
                "data.count" => data_count = num(key, v)?,
                "data.seed" => data_seed = num(key, v)?,
                "paths.data" => data_path = Some(PathBuf::from(v)),
                "paths.checkpoint" => checkpoint_path = Some(PathBuf::from(v)),
                _ => unreachable!("key list and match arms agree"),
            }
        }

        let invalid =
            |section: &str, e: rnerf_core::Error| CliError::Config(format!("{section}: {e}"));
        let rx_box = Region::new(rx_min, rx_max).map_err(|e| invalid("scene.rx_min/rx_max", e))?;
        let ris_region =
            Region::new(ris_min, ris_max).map_err(|e| invalid("scene.ris_min/ris_max", e))?;
        let layout = SceneLayout {
            tx,
            ris: if candidates == 0 {
                RisPlacement::Continuous(ris_region)
            } else {
                RisPlacement::Candidates {
                    region: ris_region,
                    count: candidates,
                }
            },
            rx_box,
        };
        let bounds = match (bounds_min, bounds_max) {
            (None, None) => layout.bounds().map_err(|e| invalid("scene", e))?,
            (Some(lo), Some(hi)) => SceneBounds::new(lo, hi).map_err(|e| invalid("bounds", e))?,
            _ => {
                return Err(CliError::Config(
                    "bounds.min and bounds.max must be given together".into(),
                ))
            }
        };
        if rays.t_far.is_nan() {
            rays.t_far = bounds.diagonal();
        }
        rays.validate().map_err(|e| invalid("rays", e))?;
        let encoding = InputEncoding::new(encoding.levels, encoding.use_pe)
            .map_err(|e| invalid("encoding", e))?;
        shape.validate().map_err(|e| invalid("network", e))?;
        radio.validate().map_err(|e| invalid("radio", e))?;
        let profile = match profile.as_str() {
            "specular" => PhaseProfile::Specular,
            "focus" => PhaseProfile::Focus(focus.unwrap_or_else(|| rx_box.center())),
            "panel_focus" => PhaseProfile::PanelFocus(
                focus_offset.unwrap_or_else(|| layout.panel_focus_offset()),
            ),
            "random" => PhaseProfile::Random(random_seed),
            other => {
                return Err(CliError::config_value(
                    "oracle.profile",
                    other,
                    "expected panel_focus, focus, specular or random",
                ))
            }
        };
        let oracle = OracleConfig {
            constants: radio,
            rows,
            cols,
            element_spacing: spacing.unwrap_or(radio.wavelength / 2.0),
            profile,
            noise_std_db: noise,
        };
        oracle.validate().map_err(|e| invalid("oracle", e))?;
        train.validate().map_err(|e| invalid("train", e))?;
        let split =
            DatasetSplit::new(split_fraction, split_seed).map_err(|e| invalid("split", e))?;
        if data_count == 0 {
            return Err(CliError::config_value("data.count", "0", "must be >= 1"));
        }
        Ok(Self {
            rays,
            encoding,
            shape,
            oracle,
            layout,
            bounds,
            train,
            init_seed,
            split,
            data_count,
            data_seed,
            data_path,
            checkpoint_path,
        })
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig::new(self.rays, self.encoding, self.shape, self.bounds)
    }
}
