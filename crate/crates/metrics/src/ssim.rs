use rising_tomo::Image;

use crate::{check_dims, MetricsError};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;

/// Normalized 1D Gaussian window.
fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Separable Gaussian filter, valid mode: output is (n-10)×(n-10).
fn filter_valid(values: &[f64], n: usize, w: &[f64; WINDOW]) -> Vec<f64> {
    let m = n - WINDOW + 1;
    // Rows: n rows × m valid columns.
    let mut rows = vec![0.0f64; n * m];
    for r in 0..n {
        let row = &values[r * n..(r + 1) * n];
        for c in 0..m {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * row[c + k];
            }
            rows[r * m + c] = acc;
        }
    }
    // Columns: m × m.
    let mut out = vec![0.0f64; m * m];
    for r in 0..m {
        for c in 0..m {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * rows[(r + k) * m + c];
            }
            out[r * m + c] = acc;
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5) and
/// the usual stabilizers `C₁ = (0.01·L)²`, `C₂ = (0.03·L)²`.
pub fn ssim_with_range(x: &Image, y: &Image, dynamic_range: f64) -> Result<f64, MetricsError> {
    check_dims(x, y)?;
    let n = x.n();
    if n < WINDOW {
        return Err(MetricsError::TooSmallForWindow(n, WINDOW));
    }
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let w = gaussian_window();

    let xv = x.values();
    let yv = y.values();
    let xx: Vec<f64> = xv.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = yv.iter().map(|a| a * a).collect();
    let xy: Vec<f64> = xv.iter().zip(yv).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(xv, n, &w);
    let mu_y = filter_valid(yv, n, &w);
    let e_xx = filter_valid(&xx, n, &w);
    let e_yy = filter_valid(&yy, n, &w);
    let e_xy = filter_valid(&xy, n, &w);

    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let mx = mu_x[i];
        let my = mu_y[i];
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// SSIM for images in `[0, 1]` (dynamic range 1).
pub fn ssim(x: &Image, y: &Image) -> Result<f64, MetricsError> {
    ssim_with_range(x, y, 1.0)
}
