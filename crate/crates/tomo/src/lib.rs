//! 2D computed-tomography core: acquisition geometry, a ray-driven forward
//! projector with its exact transpose, and noisy sinogram simulation.
//!
//! The projector is matched by construction: forward and back projection
//! enumerate the same Siddon intersection coefficients, so `⟨Ax, y⟩ = ⟨x, Aᵀy⟩`
//! holds to floating-point rounding. The system is only ever applied in
//! operator form; no matrix is assembled.

mod error;
mod geometry;
mod grid;
mod image;
mod io;
mod noise;
mod project;
mod ray;
pub mod rng;
mod sinogram;

pub use error::TomoError;
pub use geometry::{BeamMode, ScanGeometry};
pub use grid::{GridSpec, Vec2};
pub use image::Image;
pub use io::{
    atomic_write, read_geometry, read_image, read_sinogram, write_geometry, write_image,
    write_sinogram,
};
pub use noise::simulate_sinogram;
pub use project::{back_project, forward_project};
pub use ray::trace_ray;
pub use sinogram::Sinogram;

/// Euclidean inner product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm of a slice.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
