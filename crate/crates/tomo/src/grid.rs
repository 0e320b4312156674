use serde::{Deserialize, Serialize};

use crate::TomoError;

/// A 2D point or vector in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Square pixel raster centered on the physical origin.
///
/// The image spans `[-n·pixel_size/2, n·pixel_size/2]` on both axes. Values
/// are stored row-major with row 0 at the top (largest `y`), columns running
/// left to right along `+x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Pixels per side; the image is `n × n`.
    pub n: usize,
    /// Physical side length of one pixel.
    pub pixel_size: f64,
}

impl GridSpec {
    pub fn new(n: usize, pixel_size: f64) -> Result<Self, TomoError> {
        if n < 2 {
            return Err(TomoError::InvalidParameter {
                what: "grid side",
                why: format!("n must be at least 2, got {n}"),
            });
        }
        if !(pixel_size > 0.0) || !pixel_size.is_finite() {
            return Err(TomoError::InvalidParameter {
                what: "pixel size",
                why: format!("must be positive and finite, got {pixel_size}"),
            });
        }
        Ok(GridSpec { n, pixel_size })
    }

    /// Grid with unit pixels, the default physical scale.
    pub fn unit(n: usize) -> Result<Self, TomoError> {
        GridSpec::new(n, 1.0)
    }

    pub fn num_pixels(&self) -> usize {
        self.n * self.n
    }

    /// Physical half-extent of the image on each axis.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.n as f64 * self.pixel_size
    }

    /// Physical center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> Vec2 {
        let h = self.half_extent();
        Vec2::new(
            (col as f64 + 0.5) * self.pixel_size - h,
            h - (row as f64 + 0.5) * self.pixel_size,
        )
    }
}
