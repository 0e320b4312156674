use crate::{GridSpec, TomoError};

/// Square gray-scale raster on a [`GridSpec`], stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Image {
    /// Wraps `values` (row-major, length `n²`) on `grid`.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, TomoError> {
        if values.len() != grid.num_pixels() {
            return Err(TomoError::ShapeMismatch {
                what: "image values",
                expected: format!("{} samples", grid.num_pixels()),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TomoError::NonFinite { what: "image values" });
        }
        Ok(Image { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Image {
            grid,
            values: vec![0.0; grid.num_pixels()],
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self, TomoError> {
        Image::new(grid, vec![value; grid.num_pixels()])
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.grid.n + col] = v;
    }
}
