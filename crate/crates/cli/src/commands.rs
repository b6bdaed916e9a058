use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rnerf_core::autodiff::{resume, train, LossHistory, Regressor};
use rnerf_core::evaluation::{
    default_cdf_thresholds, error_cdf, evaluate, metrics, run_ablation, write_cdf,
    write_report_csv, write_report_text, AblationConfig, DirectMlp, ExperimentConfig, MriBaseline,
    ReportRow, SingleStageModel,
};
use rnerf_core::geometry::Point3;
use rnerf_core::network::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use rnerf_core::network::RNerfModel;
use rnerf_core::scene::{
    generate_dataset, load_dataset, save_dataset, split_dataset, Placement, SceneSample,
};

use crate::config::RunConfig;
use crate::error::CliError;

fn read_dataset(path: &Path) -> Result<Vec<SceneSample>, CliError> {
    if !path.is_file() {
        return Err(CliError::Input(format!(
            "data file {} does not exist",
            path.display()
        )));
    }
    load_dataset(path).map_err(|e| match e {
        rnerf_core::Error::Io(io) => CliError::Input(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    if !path.is_file() {
        return Err(CliError::Input(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    Ok(load_checkpoint(path)?)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Generates an oracle dataset; returns the number of rows written.
pub fn cmd_gen_data(
    cfg: &RunConfig,
    out: &Path,
    count: Option<usize>,
    seed: Option<u64>,
) -> Result<usize, CliError> {
    let count = count.unwrap_or(cfg.data_count);
    let samples = generate_dataset(
        &cfg.layout,
        count,
        &cfg.oracle,
        seed.unwrap_or(cfg.data_seed),
    )?;
    save_dataset(&samples, out)?;
    info!("wrote {} samples to {}", samples.len(), out.display());
    Ok(samples.len())
}

/// Path of the loss history written next to a checkpoint.
pub fn history_path(checkpoint: &Path) -> PathBuf {
    with_suffix(checkpoint, ".history.csv")
}

fn write_history(path: &Path, h: &LossHistory, first_epoch: usize) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "epoch,train_loss,validation_mae")?;
    for (i, loss) in h.train_loss.iter().enumerate() {
        match h.validation_mae.get(i) {
            Some(v) => writeln!(w, "{},{loss},{v}", first_epoch + i)?,
            None => writeln!(w, "{},{loss},", first_epoch + i)?,
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub optimizer_step: u64,
    pub train_count: usize,
    pub floor_hits: usize,
}

/// Trains the two-stage model on the training split of `data`, optionally
/// resuming from an earlier checkpoint, and writes the checkpoint plus its
/// loss history.
pub fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    checkpoint_out: &Path,
    resume_from: Option<&Path>,
) -> Result<TrainSummary, CliError> {
    let samples = read_dataset(data)?;
    let (train_set, _) = split_dataset(&samples, &cfg.split)?;
    let (outcome, first_epoch) = match resume_from {
        Some(path) => {
            let ckpt = read_checkpoint(path)?;
            let optimizer = ckpt.optimizer.ok_or_else(|| {
                CliError::Input(format!(
                    "checkpoint {} has no optimizer state",
                    path.display()
                ))
            })?;
            let steps = cfg.train.steps_per_epoch(train_set.len().max(2)) as u64;
            let start = (optimizer.step / steps) as usize;
            (
                resume(ckpt.model, optimizer, &train_set, &cfg.train)?,
                start,
            )
        }
        None => {
            let model = RNerfModel::new(cfg.model_config(), cfg.init_seed)?;
            (train(model, &train_set, &cfg.train)?, 0)
        }
    };
    save_checkpoint(checkpoint_out, &outcome.model, Some(&outcome.optimizer))?;
    write_history(&history_path(checkpoint_out), &outcome.history, first_epoch)?;
    if outcome.floor_hits > 0 {
        warn!(
            "{} predictions hit the dB floor during training",
            outcome.floor_hits
        );
    }
    info!(
        "trained {} epochs on {} samples; best epoch {}; checkpoint {}",
        outcome.history.train_loss.len(),
        train_set.len(),
        outcome.best_epoch,
        checkpoint_out.display()
    );
    Ok(TrainSummary {
        epochs_run: outcome.history.train_loss.len(),
        best_epoch: outcome.best_epoch,
        optimizer_step: outcome.optimizer.step,
        train_count: train_set.len(),
        floor_hits: outcome.floor_hits,
    })
}

/// Paths written by [`cmd_eval`] for a report prefix.
pub struct ReportPaths {
    pub text: PathBuf,
    pub csv: PathBuf,
}

impl ReportPaths {
    pub fn new(prefix: &Path) -> Self {
        Self {
            text: with_suffix(prefix, ".txt"),
            csv: with_suffix(prefix, ".csv"),
        }
    }

    /// CDF file of one model; `r-nerf` gets the unqualified name.
    pub fn cdf(prefix: &Path, model: &str) -> PathBuf {
        if model == "r-nerf" {
            with_suffix(prefix, ".cdf.csv")
        } else {
            with_suffix(prefix, &format!(".cdf.{model}.csv"))
        }
    }
}

fn ablation_name(c: &AblationConfig) -> &'static str {
    match (c.use_ray_tracing, c.use_pe) {
        (true, true) => "ablation-rt-pe",
        (true, false) => "ablation-rt-nope",
        (false, true) => "ablation-nort-pe",
        (false, false) => "ablation-nort-nope",
    }
}

/// Scores the checkpoint on the test split, optionally with baselines and
/// the ablation grid, and writes the text report, CSV report and CDF files.
pub fn cmd_eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    data: &Path,
    report_prefix: &Path,
    baselines: bool,
    ablation: bool,
) -> Result<Vec<ReportRow>, CliError> {
    let model = read_checkpoint(checkpoint)?.model;
    let samples = read_dataset(data)?;
    let (train_set, test) = split_dataset(&samples, &cfg.split)?;
    let truth: Vec<f64> = test.iter().map(|s| s.strength).collect();
    let thresholds = default_cdf_thresholds();

    let mut predictions: Vec<(String, Vec<f64>)> = Vec::new();
    predictions.push(("r-nerf".into(), evaluate(&model, &test)?.1));

    let model_cfg = *model.config();
    if baselines {
        let mri = MriBaseline::fit(&train_set)?;
        let placements: Vec<Placement> = test.iter().map(SceneSample::placement).collect();
        predictions.push(("mri".into(), mri.predict_all(&placements)));

        let mlp = DirectMlp::new(
            &model_cfg.shape,
            model_cfg.encoding,
            model_cfg.bounds,
            cfg.init_seed,
        )?;
        let mlp = train(mlp, &train_set, &cfg.train)?.model;
        predictions.push(("mlp".into(), mlp.predict_samples(&test)?));

        let single = train(
            SingleStageModel::new(model_cfg, cfg.init_seed)?,
            &train_set,
            &cfg.train,
        )?
        .model;
        predictions.push(("single-stage".into(), single.predict_samples(&test)?));
    }

    let mut rows: Vec<ReportRow> = Vec::new();
    for (name, pred) in &predictions {
        rows.push(ReportRow {
            name: name.clone(),
            report: metrics(pred, &truth)?,
        });
        let cdf = error_cdf(pred, &truth, &thresholds)?;
        let mut w = create(&ReportPaths::cdf(report_prefix, name))?;
        write_cdf(&thresholds, &cdf, &mut w)?;
        w.flush()?;
    }

    if ablation {
        let exp = ExperimentConfig {
            model: model_cfg,
            train: cfg.train,
            init_seed: cfg.init_seed,
        };
        for row in run_ablation(&train_set, &test, &AblationConfig::full_grid(), &exp)? {
            rows.push(ReportRow {
                name: ablation_name(&row.config).into(),
                report: row.report,
            });
        }
    }

    let paths = ReportPaths::new(report_prefix);
    let mut text = create(&paths.text)?;
    writeln!(
        text,
        "test samples: {}  train samples: {}  split seed: {}  init seed: {}  train seed: {}",
        test.len(),
        train_set.len(),
        cfg.split.seed,
        cfg.init_seed,
        cfg.train.seed
    )?;
    write_report_text(&rows, &mut text)?;
    text.flush()?;
    let mut csv = create(&paths.csv)?;
    write_report_csv(&rows, &mut csv)?;
    csv.flush()?;
    Ok(rows)
}

/// Predicted strengths in dB, including the training target offset.
pub fn cmd_predict(checkpoint: &Path, placements: &[Placement]) -> Result<Vec<f64>, CliError> {
    let model = read_checkpoint(checkpoint)?.model;
    Ok(model.predict(placements)?)
}

/// Axis-aligned plane the field is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl std::str::FromStr for Plane {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            other => Err(CliError::Usage(format!(
                "unknown plane {other:?}; expected xy, xz or yz"
            ))),
        }
    }
}

/// `rows x cols` grid spanning `u_range` by `v_range` on a plane at offset `at`.
///
/// `u` and `v` are the plane's first and second axes (`xz`: `u = x`, `v = z`).
/// Column `j` sits at `u0 + j (u1 - u0) / (cols - 1)`, row `i` likewise in `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub plane: Plane,
    pub at: f64,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Usage(
                "field grid needs at least one row and column".into(),
            ));
        }
        let vals = [
            self.at,
            self.u_range.0,
            self.u_range.1,
            self.v_range.0,
            self.v_range.1,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage(
                "field grid coordinates must be finite".into(),
            ));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize, k: usize) -> f64 {
        if n == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + k as f64 * (range.1 - range.0) / (n - 1) as f64
        }
    }

    pub fn point(&self, row: usize, col: usize) -> Point3 {
        let u = Self::axis(self.u_range, self.cols, col);
        let v = Self::axis(self.v_range, self.rows, row);
        match self.plane {
            Plane::Xy => Point3::new(u, v, self.at),
            Plane::Xz => Point3::new(u, self.at, v),
            Plane::Yz => Point3::new(self.at, u, v),
        }
    }
}

/// Predicted field, row-major: `values[row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub values: Vec<Vec<f64>>,
    pub min_db: f64,
    pub max_db: f64,
}

impl FieldGrid {
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > self.values[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Companion image path of a field file.
pub fn pgm_path(out: &Path) -> PathBuf {
    out.with_extension("pgm")
}

/// Evaluates the model over `grid` for one TX/RIS placement and writes the
/// CSV matrix plus a grayscale image scaled linearly from min to max dB.
pub fn cmd_field(
    checkpoint: &Path,
    tx: Point3,
    ris: Point3,
    grid: &GridSpec,
    out: &Path,
) -> Result<FieldGrid, CliError> {
    grid.validate()?;
    let model = read_checkpoint(checkpoint)?.model;
    let bounds = model.config().bounds;
    let mut placements = Vec::with_capacity(grid.rows * grid.cols);
    let mut outside = 0;
    for i in 0..grid.rows {
        for j in 0..grid.cols {
            let rx = grid.point(i, j);
            if !bounds.contains(&rx) {
                outside += 1;
            }
            placements.push(Placement { tx, ris, rx });
        }
    }
    if outside > 0 {
        warn!("{outside} grid points lie outside the model's scene bounds; evaluating anyway");
    }
    let flat = model.predict(&placements)?;
    let values: Vec<Vec<f64>> = flat.chunks(grid.cols).map(<[f64]>::to_vec).collect();
    let min_db = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let max_db = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut w = create(out)?;
    for row in &values {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;

    let mut img = create(&pgm_path(out))?;
    writeln!(img, "P2")?;
    writeln!(img, "# linear gray: 0 = {min_db} dB, 255 = {max_db} dB")?;
    writeln!(img, "# row 0 = first v value, column 0 = first u value")?;
    writeln!(img, "{} {}", grid.cols, grid.rows)?;
    writeln!(img, "255")?;
    let span = max_db - min_db;
    for row in &values {
        let px: Vec<String> = row
            .iter()
            .map(|v| {
                let g = if span > 0.0 {
                    (v - min_db) / span * 255.0
                } else {
                    0.0
                };
                (g.round() as u32).min(255).to_string()
            })
            .collect();
        writeln!(img, "{}", px.join(" "))?;
    }
    img.flush()?;
    Ok(FieldGrid {
        values,
        min_db,
        max_db,
    })
}
