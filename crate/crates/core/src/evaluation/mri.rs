use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scene::{Placement, SceneSample};

fn total_path(p: &Placement) -> f64 {
    p.tx.distance(&p.ris) + p.ris.distance(&p.rx)
}

fn ris_key(p: Point3) -> [u64; 3] {
    p.to_array().map(f64::to_bits)
}

/// Interpolation baseline: a log-distance trend over the total TX-RIS-RX path
/// plus inverse-square-distance weighting of the residuals in RX space.
///
/// Only training samples with the query's RIS position contribute; if there
/// are none, all samples do.
#[derive(Debug, Clone)]
pub struct MriBaseline {
    intercept: f64,
    slope: f64,
    rx: Vec<Point3>,
    residuals: Vec<f64>,
    by_ris: HashMap<[u64; 3], Vec<usize>>,
}

impl MriBaseline {
    pub fn fit(train: &[SceneSample]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid(
                "MRI baseline needs at least one training sample",
            ));
        }
        let n = train.len() as f64;
        let x: Vec<f64> = train
            .iter()
            .map(|s| total_path(&s.placement()).max(1e-12).log10())
            .collect();
        let x_mean = x.iter().sum::<f64>() / n;
        let y_mean = train.iter().map(|s| s.strength).sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
        let sxy: f64 = x
            .iter()
            .zip(train)
            .map(|(v, s)| (v - x_mean) * (s.strength - y_mean))
            .sum();
        let slope = if sxx > 1e-12 { sxy / sxx } else { 0.0 };
        let intercept = y_mean - slope * x_mean;

        let residuals = x
            .iter()
            .zip(train)
            .map(|(v, s)| s.strength - (intercept + slope * v))
            .collect();
        let mut by_ris: HashMap<[u64; 3], Vec<usize>> = HashMap::new();
        for (i, s) in train.iter().enumerate() {
            by_ris.entry(ris_key(s.ris)).or_default().push(i);
        }
        Ok(Self {
            intercept,
            slope,
            rx: train.iter().map(|s| s.rx).collect(),
            residuals,
            by_ris,
        })
    }

    /// Log-distance trend in dB at a placement.
    pub fn trend(&self, p: &Placement) -> f64 {
        self.intercept + self.slope * total_path(p).max(1e-12).log10()
    }

    pub fn predict(&self, p: &Placement) -> f64 {
        let residual = match self.by_ris.get(&ris_key(p.ris)) {
            Some(idx) => self.interpolate(p.rx, idx.iter().copied()),
            None => self.interpolate(p.rx, 0..self.rx.len()),
        };
        self.trend(p) + residual
    }

    pub fn predict_all(&self, placements: &[Placement]) -> Vec<f64> {
        placements.iter().map(|p| self.predict(p)).collect()
    }

    fn interpolate(&self, rx: Point3, idx: impl Iterator<Item = usize> + Clone) -> f64 {
        let (mut exact_sum, mut exact_n) = (0.0, 0usize);
        let (mut wsum, mut acc) = (0.0, 0.0);
        for i in idx {
            let d2 = {
                let d = rx - self.rx[i];
                d.x * d.x + d.y * d.y + d.z * d.z
            };
            if d2 == 0.0 {
                exact_sum += self.residuals[i];
                exact_n += 1;
            } else {
                let w = 1.0 / d2;
                wsum += w;
                acc += w * self.residuals[i];
            }
        }
        if exact_n > 0 {
            exact_sum / exact_n as f64
        } else {
            acc / wsum
        }
    }
}
