use crate::error::{Error, Result};

/// Mean of squared differences.
pub fn mse_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != target.len() {
        return Err(Error::invalid(format!(
            "mse_loss needs equal non-empty lengths, got {} and {}",
            predicted.len(),
            target.len()
        )));
    }
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predicted.len() as f64)
}
