use rayon::prelude::*;

use crate::ray::for_each_crossing;
use crate::{GridSpec, Image, ScanGeometry, Sinogram};

/// Views per parallel work unit. Fixed (not tied to thread count) so that
/// the back-projection reduction order, and hence the floating-point result,
/// is identical for any thread pool.
const VIEW_CHUNK: usize = 8;

/// Applies the projector `A`: one line integral per `(view, detector)` ray.
pub fn forward_project(image: &Image, geom: &ScanGeometry) -> Sinogram {
    let grid = image.grid();
    let values = image.values();
    let ndet = geom.num_detectors;
    let mut out = vec![0.0f64; geom.num_rays()];
    out.par_chunks_mut(ndet)
        .enumerate()
        .for_each(|(view, row)| {
            for (det, r) in row.iter_mut().enumerate() {
                let (src, dst) = geom.ray_endpoints(&grid, view, det);
                let mut acc = 0.0;
                for_each_crossing(&grid, src, dst, |idx, len| acc += len * values[idx]);
                *r = acc;
            }
        });
    Sinogram::new(geom.clone(), out).expect("forward projection produced consistent shape")
}

/// Applies the exact transpose `Aᵀ`: pixel `j` accumulates `Σ ℓ_j(ray)·s(ray)`
/// with the same intersection coefficients the forward projector uses.
pub fn back_project(sino: &Sinogram, grid: &GridSpec) -> Image {
    let geom = sino.geometry();
    let npix = grid.num_pixels();
    let views: Vec<usize> = (0..geom.num_views()).collect();
    // Per-chunk partial images, summed sequentially in chunk order.
    let partials: Vec<Vec<f64>> = views
        .par_chunks(VIEW_CHUNK)
        .map(|chunk| {
            let mut partial = vec![0.0f64; npix];
            for &view in chunk {
                let row = sino.view(view);
                for (det, &s) in row.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let (src, dst) = geom.ray_endpoints(grid, view, det);
                    for_each_crossing(grid, src, dst, |idx, len| partial[idx] += len * s);
                }
            }
            partial
        })
        .collect();
    let mut acc = vec![0.0f64; npix];
    for partial in partials {
        for (a, p) in acc.iter_mut().zip(&partial) {
            *a += p;
        }
    }
    Image::new(*grid, acc).expect("back projection produced consistent shape")
}
