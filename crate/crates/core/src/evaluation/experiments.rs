use log::info;

use super::{metrics, DirectMlp, MetricReport};
use crate::autodiff::{train, Regressor, TrainConfig};
use crate::error::Result;
use crate::network::{ModelConfig, RNerfModel};
use crate::scene::{split_dataset, DatasetSplit, SceneSample};

/// Model, training settings and initialization seed shared by comparative runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub init_seed: u64,
}

/// One ablation cell. Without ray tracing the direct MLP is trained instead
/// of the two-stage model; without PE raw normalized coordinates are fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationConfig {
    pub use_ray_tracing: bool,
    pub use_pe: bool,
}

impl AblationConfig {
    /// The four rows: ray tracing with and without PE, then the MLP with and without PE.
    pub fn full_grid() -> [AblationConfig; 4] {
        [(true, true), (true, false), (false, true), (false, false)].map(|(rt, pe)| {
            AblationConfig {
                use_ray_tracing: rt,
                use_pe: pe,
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match (self.use_ray_tracing, self.use_pe) {
            (true, true) => "ray tracing + PE",
            (true, false) => "ray tracing, no PE",
            (false, true) => "no ray tracing + PE",
            (false, false) => "no ray tracing, no PE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub config: AblationConfig,
    pub report: MetricReport,
    pub init_seed: u64,
    pub train_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub train_fraction: f64,
    pub train_count: usize,
    pub report: MetricReport,
}

/// Metrics and per-sample predictions of a trained model on `test`.
pub fn evaluate<M: Regressor>(model: &M, test: &[SceneSample]) -> Result<(MetricReport, Vec<f64>)> {
    let pred = model.predict_samples(test)?;
    let truth: Vec<f64> = test.iter().map(|s| s.strength).collect();
    Ok((metrics(&pred, &truth)?, pred))
}

fn fit_and_score<M: Regressor>(
    model: M,
    train_set: &[SceneSample],
    test: &[SceneSample],
    cfg: &TrainConfig,
) -> Result<MetricReport> {
    let out = train(model, train_set, cfg)?;
    evaluate(&out.model, test).map(|(r, _)| r)
}

/// Trains and scores every configuration in `grid` on the same split.
pub fn run_ablation(
    train_set: &[SceneSample],
    test: &[SceneSample],
    grid: &[AblationConfig],
    exp: &ExperimentConfig,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &config in grid {
        let mut model_cfg = exp.model;
        model_cfg.encoding.use_pe = config.use_pe;
        let report = if config.use_ray_tracing {
            fit_and_score(
                RNerfModel::new(model_cfg, exp.init_seed)?,
                train_set,
                test,
                &exp.train,
            )?
        } else {
            let mlp = DirectMlp::new(
                &model_cfg.shape,
                model_cfg.encoding,
                model_cfg.bounds,
                exp.init_seed,
            )?;
            fit_and_score(mlp, train_set, test, &exp.train)?
        };
        info!(
            "ablation [{}] seeds init={} train={}: MAE {:.3} dB",
            config.label(),
            exp.init_seed,
            exp.train.seed,
            report.mae
        );
        rows.push(AblationRow {
            config,
            report,
            init_seed: exp.init_seed,
            train_seed: exp.train.seed,
        });
    }
    Ok(rows)
}

/// Two-stage test metrics as the training share grows; each fraction is a fresh split of `samples`.
pub fn fraction_sweep(
    samples: &[SceneSample],
    fractions: &[f64],
    split_seed: u64,
    exp: &ExperimentConfig,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let (train_set, test) = split_dataset(samples, &DatasetSplit::new(f, split_seed)?)?;
        let report = fit_and_score(
            RNerfModel::new(exp.model, exp.init_seed)?,
            &train_set,
            &test,
            &exp.train,
        )?;
        info!(
            "fraction {f}: {} training samples, MAE {:.3} dB",
            train_set.len(),
            report.mae
        );
        out.push(SweepPoint {
            train_fraction: f,
            train_count: train_set.len(),
            report,
        });
    }
    Ok(out)
}
