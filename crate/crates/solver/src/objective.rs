use rising_tomo::{back_project, forward_project, Image, Sinogram};

use crate::tv::{tv_grad, tv_value};
use crate::SolverConfig;

/// Reconstruction objective `‖Ax − b‖₂² + λ·TV_β(x)`.
pub fn objective(x: &Image, b: &Sinogram, cfg: &SolverConfig) -> f64 {
    let ax = forward_project(x, b.geometry());
    let fit: f64 = ax
        .values()
        .iter()
        .zip(b.values())
        .map(|(a, bv)| (a - bv) * (a - bv))
        .sum();
    fit + cfg.lambda * tv_value(x.values(), x.n(), cfg.beta)
}

/// Gradient of [`objective`]: `2Aᵀ(Ax − b) + λ·∇TV_β(x)`.
pub fn objective_gradient(x: &Image, b: &Sinogram, cfg: &SolverConfig) -> Image {
    let ax = forward_project(x, b.geometry());
    let residual: Vec<f64> = ax
        .values()
        .iter()
        .zip(b.values())
        .map(|(a, bv)| a - bv)
        .collect();
    let at_res = back_project(
        &Sinogram::new(b.geometry().clone(), residual).expect("residual has sinogram shape"),
        &x.grid(),
    );
    let n = x.n();
    let mut tv = vec![0.0f64; n * n];
    tv_grad(x.values(), n, cfg.beta, &mut tv);
    let values = at_res
        .values()
        .iter()
        .zip(&tv)
        .map(|(ls, t)| 2.0 * ls + cfg.lambda * t)
        .collect();
    Image::new(x.grid(), values).expect("gradient has the image's shape")
}
