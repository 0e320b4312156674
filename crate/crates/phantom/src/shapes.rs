use rising_tomo::{GridSpec, Image};
use serde::{Deserialize, Serialize};

use crate::PhantomError;

/// One uniform shape with an additive intensity.
///
/// Coordinates are physical (same frame as [`GridSpec`]); `intensity` lies
/// in `[-1, 1]` and is added to whatever the shape covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ShapeElement {
    Ellipse {
        center: (f64, f64),
        /// Semi-axes `(a, b)` before rotation.
        semi_axes: (f64, f64),
        rotation_deg: f64,
        intensity: f64,
    },
    Line {
        from: (f64, f64),
        to: (f64, f64),
        thickness: f64,
        intensity: f64,
    },
}

impl ShapeElement {
    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |why: String| PhantomError::Invalid {
            what: "shape element",
            why,
        };
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            ShapeElement::Ellipse {
                center,
                semi_axes,
                rotation_deg,
                intensity,
            } => {
                if !finite(&[center.0, center.1, semi_axes.0, semi_axes.1, *rotation_deg, *intensity]) {
                    return Err(bad("non-finite parameter".into()));
                }
                if !(semi_axes.0 > 0.0 && semi_axes.1 > 0.0) {
                    return Err(bad(format!("semi-axes must be positive, got {semi_axes:?}")));
                }
            }
            ShapeElement::Line {
                from,
                to,
                thickness,
                intensity,
            } => {
                if !finite(&[from.0, from.1, to.0, to.1, *thickness, *intensity]) {
                    return Err(bad("non-finite parameter".into()));
                }
                if from == to {
                    return Err(bad("line endpoints coincide".into()));
                }
                if !(*thickness > 0.0) {
                    return Err(bad(format!("thickness must be positive, got {thickness}")));
                }
            }
        }
        let intensity = match self {
            ShapeElement::Ellipse { intensity, .. } | ShapeElement::Line { intensity, .. } => *intensity,
        };
        if !(-1.0..=1.0).contains(&intensity) {
            return Err(bad(format!("intensity must lie in [-1, 1], got {intensity}")));
        }
        Ok(())
    }

    /// Whether the physical point `(x, y)` lies inside the shape. Pixel
    /// membership is decided at the pixel center, keeping interiors exactly
    /// uniform.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            ShapeElement::Ellipse {
                center,
                semi_axes,
                rotation_deg,
                ..
            } => {
                let (s, c) = rotation_deg.to_radians().sin_cos();
                let dx = x - center.0;
                let dy = y - center.1;
                // Rotate into the ellipse frame.
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                (u / semi_axes.0).powi(2) + (v / semi_axes.1).powi(2) <= 1.0
            }
            ShapeElement::Line {
                from,
                to,
                thickness,
                ..
            } => {
                // Distance from the point to the segment, clamped to its ends.
                let ex = to.0 - from.0;
                let ey = to.1 - from.1;
                let len2 = ex * ex + ey * ey;
                let t = (((x - from.0) * ex + (y - from.1) * ey) / len2).clamp(0.0, 1.0);
                let px = from.0 + t * ex;
                let py = from.1 + t * ey;
                let d2 = (x - px).powi(2) + (y - py).powi(2);
                d2 <= (0.5 * thickness).powi(2)
            }
        }
    }

    pub fn intensity(&self) -> f64 {
        match self {
            ShapeElement::Ellipse { intensity, .. } | ShapeElement::Line { intensity, .. } => *intensity,
        }
    }
}

/// Renders the shape's indicator times its intensity on `grid`: a pixel gets
/// `intensity` if its center is inside, 0 otherwise.
pub fn rasterize_element(elem: &ShapeElement, grid: &GridSpec) -> Image {
    let n = grid.n;
    let mut values = vec![0.0f64; grid.num_pixels()];
    let intensity = elem.intensity();
    for r in 0..n {
        for c in 0..n {
            let p = grid.pixel_center(r, c);
            if elem.contains(p.x, p.y) {
                values[r * n + c] = intensity;
            }
        }
    }
    Image::new(*grid, values).expect("rasterized increment has the grid's shape")
}
