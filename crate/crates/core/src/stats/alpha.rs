//! Krippendorff's alpha with the interval (squared difference) metric.

use crate::error::{Error, Result};
use crate::model::RatingMatrix;

/// Sum of squared deviations from the mean.
fn sum_sq_dev(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Alpha over rating units (one value list per item). Units with fewer than
/// two values are not pairable and are ignored.
///
/// Uses `sum_{i != j} (v_i - v_j)^2 = 2 m * SS` per unit, where `SS` is the
/// sum of squared deviations from the unit mean, for both the observed
/// (within-unit) and the expected (pooled) disagreement.
pub fn alpha_interval_from_units(units: &[Vec<f64>]) -> Result<f64> {
    let pairable: Vec<&Vec<f64>> = units.iter().filter(|u| u.len() >= 2).collect();
    if pairable.is_empty() {
        return Err(Error::NoPairableItems);
    }
    let n: usize = pairable.iter().map(|u| u.len()).sum();
    let n_f = n as f64;

    let observed: f64 = pairable
        .iter()
        .map(|u| {
            let m = u.len() as f64;
            2.0 * m * sum_sq_dev(u) / (m - 1.0)
        })
        .sum::<f64>()
        / n_f;

    let pooled: Vec<f64> = pairable.iter().flat_map(|u| u.iter().copied()).collect();
    let expected = 2.0 * n_f * sum_sq_dev(&pooled) / (n_f * (n_f - 1.0));

    if expected == 0.0 {
        // every pooled value is identical: perfect agreement by definition
        return Ok(1.0);
    }
    Ok(1.0 - observed / expected)
}

pub fn krippendorff_alpha_interval(m: &RatingMatrix) -> Result<f64> {
    alpha_interval_from_units(&m.values_by_item())
}
