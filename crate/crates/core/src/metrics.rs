//! Evaluation metrics.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::DimensionMismatch {
            context: "predictions vs ground truth",
            expected: b,
            actual: a,
        });
    }
    Ok(())
}

/// Fraction of exact class matches.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    check_len(predicted.len(), truth.len())?;
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean of squared errors over all entries.
pub fn mse(predicted: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<f64> {
    check_len(predicted.nrows(), truth.nrows())?;
    check_len(predicted.ncols(), truth.ncols())?;
    let sum: f64 = predicted.iter().zip(truth.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / predicted.len() as f64)
}

/// Fraction of samples whose prediction lies within Euclidean distance `radius`
/// of the truth.
pub fn within_range_accuracy(predicted: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>, radius: f64) -> Result<f64> {
    check_len(predicted.nrows(), truth.nrows())?;
    check_len(predicted.ncols(), truth.ncols())?;
    let hits = predicted
        .rows()
        .into_iter()
        .zip(truth.rows())
        .filter(|(p, t)| {
            let d2: f64 = p.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() <= radius
        })
        .count();
    Ok(hits as f64 / truth.nrows() as f64)
}
