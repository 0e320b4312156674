use crate::{ScanGeometry, TomoError};

/// Projection measurements, view-major: `values[view * num_detectors + det]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    geometry: ScanGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, values: Vec<f64>) -> Result<Self, TomoError> {
        if values.len() != geometry.num_rays() {
            return Err(TomoError::ShapeMismatch {
                what: "sinogram values",
                expected: format!(
                    "{} views × {} detectors = {}",
                    geometry.num_views(),
                    geometry.num_detectors,
                    geometry.num_rays()
                ),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TomoError::NonFinite {
                what: "sinogram values",
            });
        }
        Ok(Sinogram { geometry, values })
    }

    pub fn zeros(geometry: ScanGeometry) -> Self {
        let len = geometry.num_rays();
        Sinogram {
            geometry,
            values: vec![0.0; len],
        }
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
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

    pub fn at(&self, view: usize, det: usize) -> f64 {
        self.values[view * self.geometry.num_detectors + det]
    }

    /// One contiguous view row.
    pub fn view(&self, view: usize) -> &[f64] {
        let d = self.geometry.num_detectors;
        &self.values[view * d..(view + 1) * d]
    }
}
