//! Full-reference image quality metrics.
//!
//! `relative_error` is the squared-norm ratio `‖x − x_gt‖₂² / ‖x_gt‖₂²`.
//! Note the square: this follows the convention used throughout the
//! evaluation tables this crate feeds, not the unsquared ratio the name
//! usually suggests elsewhere.

mod report;
mod ssim;

pub use report::{format_comparison_table, Aggregate, MetricRecord, MetricsReport};
pub use ssim::{ssim, ssim_with_range};

use rising_tomo::Image;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("image dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("ground truth has zero norm")]
    ZeroGroundTruth,
    #[error("image side {0} smaller than the {1}×{1} SSIM window")]
    TooSmallForWindow(usize, usize),
}

fn check_dims(x: &Image, y: &Image) -> Result<(), MetricsError> {
    if x.n() != y.n() {
        return Err(MetricsError::DimMismatch(x.n(), y.n()));
    }
    Ok(())
}

/// Squared-norm relative error of `x` against the ground truth.
pub fn relative_error(x: &Image, x_gt: &Image) -> Result<f64, MetricsError> {
    check_dims(x, x_gt)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, g) in x.values().iter().zip(x_gt.values()) {
        num += (a - g) * (a - g);
        den += g * g;
    }
    if den == 0.0 {
        return Err(MetricsError::ZeroGroundTruth);
    }
    Ok(num / den)
}

/// Root-mean-square error `√(‖x − y‖₂² / n²)`.
pub fn rmse(x: &Image, y: &Image) -> Result<f64, MetricsError> {
    check_dims(x, y)?;
    let sum: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / x.values().len() as f64).sqrt())
}
