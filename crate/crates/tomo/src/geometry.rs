use serde::{Deserialize, Serialize};

use crate::{GridSpec, TomoError, Vec2};

/// Beam shape of the acquisition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BeamMode {
    /// Parallel rays, one per detector cell, orthogonal to the detector axis.
    Parallel,
    /// Point source rotating at distance `source_to_center` from the rotation
    /// axis, diverging rays onto a linear detector at `source_to_detector`
    /// from the source.
    Fan {
        source_to_center: f64,
        source_to_detector: f64,
    },
}

/// Fan-beam acquisition description; defines the projector implicitly.
///
/// A view is one source angle; each view measures `num_detectors` line
/// integrals, so the data vector has `angles.len() * num_detectors` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    pub mode: BeamMode,
    /// Source angles in degrees, strictly increasing, each in `[0, 360)`.
    pub angles_deg: Vec<f64>,
    /// Detector cells per view.
    pub num_detectors: usize,
    /// Physical width of one detector cell.
    pub detector_spacing: f64,
}

impl ScanGeometry {
    pub fn parallel(
        angles_deg: Vec<f64>,
        num_detectors: usize,
        detector_spacing: f64,
    ) -> Result<Self, TomoError> {
        let geom = ScanGeometry {
            mode: BeamMode::Parallel,
            angles_deg,
            num_detectors,
            detector_spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn fan(
        angles_deg: Vec<f64>,
        num_detectors: usize,
        detector_spacing: f64,
        source_to_center: f64,
        source_to_detector: f64,
    ) -> Result<Self, TomoError> {
        let geom = ScanGeometry {
            mode: BeamMode::Fan {
                source_to_center,
                source_to_detector,
            },
            angles_deg,
            num_detectors,
            detector_spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Fan-beam geometry sized so the detector subtends the whole image
    /// diagonal of `grid`: source at `2n·pixel_size`, detector at
    /// `4n·pixel_size` from the source, `2n` cells.
    pub fn fan_covering(grid: &GridSpec, angles_deg: Vec<f64>) -> Result<Self, TomoError> {
        let n = grid.n as f64;
        let dso = 2.0 * n * grid.pixel_size;
        let dsd = 4.0 * n * grid.pixel_size;
        let num_detectors = 2 * grid.n;
        let diagonal = std::f64::consts::SQRT_2 * n * grid.pixel_size;
        let spacing = (dsd / dso) * diagonal / num_detectors as f64;
        ScanGeometry::fan(angles_deg, num_detectors, spacing, dso, dsd)
    }

    /// Parallel-beam geometry whose detector spans the image diagonal.
    pub fn parallel_covering(grid: &GridSpec, angles_deg: Vec<f64>) -> Result<Self, TomoError> {
        let num_detectors = 2 * grid.n;
        let diagonal = std::f64::consts::SQRT_2 * grid.n as f64 * grid.pixel_size;
        ScanGeometry::parallel(angles_deg, num_detectors, diagonal / num_detectors as f64)
    }

    fn validate(&self) -> Result<(), TomoError> {
        let bad = |why: String| TomoError::InvalidParameter {
            what: "scan geometry",
            why,
        };
        if self.angles_deg.is_empty() {
            return Err(bad("at least one view angle required".into()));
        }
        for w in self.angles_deg.windows(2) {
            if !(w[1] > w[0]) {
                return Err(bad(format!(
                    "angles must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &a in &self.angles_deg {
            if !a.is_finite() || !(0.0..360.0).contains(&a) {
                return Err(bad(format!("angle {a} outside [0, 360)")));
            }
        }
        if self.num_detectors < 1 {
            return Err(bad("num_detectors must be at least 1".into()));
        }
        if !(self.detector_spacing > 0.0) || !self.detector_spacing.is_finite() {
            return Err(bad(format!(
                "detector_spacing must be positive, got {}",
                self.detector_spacing
            )));
        }
        if let BeamMode::Fan {
            source_to_center,
            source_to_detector,
        } = self.mode
        {
            if !(source_to_center > 0.0) || !(source_to_detector > 0.0) {
                return Err(bad("fan-beam distances must be positive".into()));
            }
            if !(source_to_detector > source_to_center) {
                return Err(bad(format!(
                    "source_to_detector ({source_to_detector}) must exceed source_to_center ({source_to_center})"
                )));
            }
        }
        Ok(())
    }

    pub fn num_views(&self) -> usize {
        self.angles_deg.len()
    }

    /// Total measurement count `m = views × detectors`.
    pub fn num_rays(&self) -> usize {
        self.angles_deg.len() * self.num_detectors
    }

    /// Signed offset of detector cell `det` from the detector midline.
    fn detector_offset(&self, det: usize) -> f64 {
        (det as f64 + 0.5 - 0.5 * self.num_detectors as f64) * self.detector_spacing
    }

    /// Segment endpoints of the ray for `(view, det)`.
    ///
    /// A pure function of the geometry and, for parallel mode, of the grid
    /// extent (parallel rays are infinite lines; the segment is clipped to a
    /// length guaranteed to cover `grid`).
    pub fn ray_endpoints(&self, grid: &GridSpec, view: usize, det: usize) -> (Vec2, Vec2) {
        let theta = self.angles_deg[view].to_radians();
        let omega = Vec2::new(theta.cos(), theta.sin());
        let axis = Vec2::new(-theta.sin(), theta.cos());
        let t = self.detector_offset(det);
        match self.mode {
            BeamMode::Parallel => {
                // Half-length n·pixel_size exceeds the grid circumradius.
                let half = grid.n as f64 * grid.pixel_size;
                let p = axis * t;
                (p - omega * half, p + omega * half)
            }
            BeamMode::Fan {
                source_to_center,
                source_to_detector,
            } => {
                let src = omega * source_to_center;
                let det_center = omega * (source_to_center - source_to_detector);
                (src, det_center + axis * t)
            }
        }
    }
}
