use crate::rng::{purpose, SeedStream};
use crate::{forward_project, norm2, Image, ScanGeometry, Sinogram, TomoError};

/// Simulates a noisy acquisition: `b = Ax + e` with white Gaussian `e`
/// rescaled so that `‖e‖₂ / ‖Ax‖₂ = noise_level` exactly.
///
/// Deterministic given `seed`. A zero clean sinogram stays zero: there is no
/// signal norm to scale against.
pub fn simulate_sinogram(
    image: &Image,
    geom: &ScanGeometry,
    noise_level: f64,
    seed: u64,
) -> Result<Sinogram, TomoError> {
    if !(noise_level >= 0.0) || !noise_level.is_finite() {
        return Err(TomoError::InvalidParameter {
            what: "noise level",
            why: format!("must be finite and nonnegative, got {noise_level}"),
        });
    }
    let mut sino = forward_project(image, geom);
    if noise_level == 0.0 {
        return Ok(sino);
    }
    let clean_norm = norm2(sino.values());
    if clean_norm == 0.0 {
        return Ok(sino);
    }
    let mut rng = SeedStream::new([purpose::NOISE, seed, 0, 0]);
    let e: Vec<f64> = (0..sino.values().len()).map(|_| rng.normal()).collect();
    let scale = noise_level * clean_norm / norm2(&e);
    for (b, e) in sino.values_mut().iter_mut().zip(&e) {
        *b += scale * e;
    }
    Ok(sino)
}
