//! Synthetic ground-truth generator: gray-scale images made of overlapping
//! uniform ellipses and line segments of varying size and contrast.
//!
//! Pixels are classified by their center point only (no anti-aliasing), so
//! every generated image is exactly piecewise constant and its discrete
//! gradient stays sparse — the structural premise the reconstruction model
//! relies on.

mod dataset;
mod shapes;

pub use dataset::{
    generate_dataset, import_external, load_manifest, DatasetManifest, ManifestEntry, Split,
};
pub use shapes::{rasterize_element, ShapeElement};

use rising_tomo::rng::{purpose, SeedStream};
use rising_tomo::{GridSpec, Image};
use serde::{Deserialize, Serialize};

/// Errors from phantom generation and dataset writing.
#[derive(Debug, thiserror::Error)]
pub enum PhantomError {
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },
    #[error(transparent)]
    Tomo(#[from] rising_tomo::TomoError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
}

/// Declarative description of a phantom family; together with an image
/// index it fully determines one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub grid: GridSpec,
    /// Inclusive range for the number of ellipses.
    pub num_ellipses_range: (usize, usize),
    /// Inclusive range for the number of line segments.
    pub num_lines_range: (usize, usize),
    /// Additive intensity per element, sampled uniformly.
    pub intensity_range: (f64, f64),
    /// Ellipse semi-axis range as a fraction of the image half-extent.
    pub size_range: (f64, f64),
    pub background: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Family defaults: a handful of large-to-medium ellipses with a few
    /// thin lines over a dark background.
    pub fn default_for(grid: GridSpec, seed: u64) -> Self {
        PhantomSpec {
            grid,
            num_ellipses_range: (4, 8),
            num_lines_range: (2, 5),
            intensity_range: (-0.5, 0.8),
            size_range: (0.08, 0.45),
            background: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |what: &'static str, why: String| PhantomError::Invalid { what, why };
        if self.num_ellipses_range.0 > self.num_ellipses_range.1 {
            return Err(bad("num_ellipses_range", "empty range".into()));
        }
        if self.num_lines_range.0 > self.num_lines_range.1 {
            return Err(bad("num_lines_range", "empty range".into()));
        }
        if !(self.intensity_range.0 <= self.intensity_range.1)
            || self.intensity_range.0 < -1.0
            || self.intensity_range.1 > 1.0
        {
            return Err(bad(
                "intensity_range",
                format!("must be a subinterval of [-1, 1], got {:?}", self.intensity_range),
            ));
        }
        if !(0.0 < self.size_range.0 && self.size_range.0 <= self.size_range.1) {
            return Err(bad("size_range", format!("must be positive, got {:?}", self.size_range)));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(bad("background", format!("must lie in [0, 1], got {}", self.background)));
        }
        Ok(())
    }
}

fn draw_elements(spec: &PhantomSpec, rng: &mut SeedStream) -> Vec<ShapeElement> {
    let half = spec.grid.half_extent();
    let ne = rng.uniform_int(spec.num_ellipses_range.0, spec.num_ellipses_range.1);
    let nl = rng.uniform_int(spec.num_lines_range.0, spec.num_lines_range.1);
    let (ilo, ihi) = spec.intensity_range;
    let (slo, shi) = spec.size_range;
    let mut elements = Vec::with_capacity(ne + nl);
    for _ in 0..ne {
        let center = (rng.uniform_in(-0.6, 0.6) * half, rng.uniform_in(-0.6, 0.6) * half);
        let semi_axes = (rng.uniform_in(slo, shi) * half, rng.uniform_in(slo, shi) * half);
        let rotation_deg = rng.uniform_in(0.0, 180.0);
        let intensity = rng.uniform_in(ilo, ihi);
        elements.push(ShapeElement::Ellipse {
            center,
            semi_axes,
            rotation_deg,
            intensity,
        });
    }
    for _ in 0..nl {
        let from = (rng.uniform_in(-0.8, 0.8) * half, rng.uniform_in(-0.8, 0.8) * half);
        let to = (rng.uniform_in(-0.8, 0.8) * half, rng.uniform_in(-0.8, 0.8) * half);
        let thickness = rng.uniform_in(0.03, 0.10) * half;
        let intensity = rng.uniform_in(ilo, ihi);
        elements.push(ShapeElement::Line {
            from,
            to,
            thickness,
            intensity,
        });
    }
    elements
}

/// Generates phantom `index` of the family: background plus the additive
/// element increments, clamped to `[0, 1]` at the end. Fully determined by
/// `(spec.seed, index)`.
pub fn generate_phantom(spec: &PhantomSpec, index: u64) -> Result<Image, PhantomError> {
    spec.validate()?;
    let mut rng = SeedStream::new([purpose::PHANTOM, spec.seed, index, 0]);
    let elements = draw_elements(spec, &mut rng);
    let mut values = vec![spec.background; spec.grid.num_pixels()];
    for elem in &elements {
        // Degenerate draws (coincident line endpoints) are skipped rather
        // than aborting the whole image.
        if elem.validate().is_err() {
            continue;
        }
        let inc = rasterize_element(elem, &spec.grid);
        for (v, i) in values.iter_mut().zip(inc.values()) {
            *v += i;
        }
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(Image::new(spec.grid, values)?)
}

/// Fraction of pixels whose forward-difference gradient is nonzero.
pub fn nonzero_gradient_fraction(image: &Image) -> f64 {
    let n = image.n();
    let v = image.values();
    let mut nonzero = 0usize;
    for r in 0..n {
        for c in 0..n {
            let dh = if c + 1 < n { v[r * n + c + 1] - v[r * n + c] } else { 0.0 };
            let dv = if r + 1 < n { v[(r + 1) * n + c] - v[r * n + c] } else { 0.0 };
            if dh != 0.0 || dv != 0.0 {
                nonzero += 1;
            }
        }
    }
    nonzero as f64 / (n * n) as f64
}
