use std::path::{Path, PathBuf};

use rising_neural::{NetworkSpec, TrainConfig};
use rising_phantom::PhantomSpec;
use rising_solver::SolverConfig;
use rising_tomo::{GridSpec, ScanGeometry};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

/// Seeds for the independent random streams of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Phantom family seed.
    pub data: u64,
    /// Base seed for per-image measurement noise.
    pub noise: u64,
    /// Network weight initialization.
    pub init: u64,
    /// Epoch shuffling.
    pub shuffle: u64,
}

/// What the network is trained against: the solver's convergence image
/// (iteration completion) or the ground truth (learnt post-processing).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Rising,
    Lpp,
}

impl TrainMode {
    /// Role label of the network output under this mode.
    pub fn output_role(self) -> &'static str {
        match self {
            TrainMode::Rising => "x_ING",
            TrainMode::Lpp => "x_LPP",
        }
    }
}

/// Where ground-truth images come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    /// Generate `count` phantoms (first `train_count` are the training
    /// split). The family seed is taken from `seeds.data`.
    Generate {
        phantom: PhantomSpec,
        count: usize,
        train_count: usize,
    },
    /// Use an existing dataset manifest.
    Manifest { path: PathBuf },
}

/// Acquisition geometry: a named protocol `P_<range>_<views>` expanded over
/// the grid with covering fan-beam defaults, or an explicit geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometrySource {
    Protocol(String),
    Explicit(ScanGeometry),
}

impl GeometrySource {
    /// Parses `P_<range>_<views>` (also tolerating `P_{range,views}`).
    fn parse_protocol(name: &str) -> Option<(f64, usize)> {
        let trimmed = name
            .trim()
            .trim_start_matches("P_")
            .trim_start_matches('{')
            .trim_end_matches('}');
        let parts: Vec<&str> = trimmed.split(['_', ',']).collect();
        if parts.len() != 2 {
            return None;
        }
        let range: f64 = parts[0].trim().parse().ok()?;
        let views: usize = parts[1].trim().parse().ok()?;
        (range > 0.0 && range <= 360.0 && views >= 1).then_some((range, views))
    }

    /// Deterministic expansion: `views` angles evenly spanning `[0, range)`.
    pub fn expand(&self, grid: &GridSpec) -> Result<ScanGeometry, PipelineError> {
        match self {
            GeometrySource::Explicit(geom) => Ok(geom.clone()),
            GeometrySource::Protocol(name) => {
                let (range, views) = Self::parse_protocol(name).ok_or_else(|| {
                    PipelineError::InvalidConfig(format!(
                        "cannot parse protocol {name:?}; expected P_<range>_<views>"
                    ))
                })?;
                let angles = (0..views)
                    .map(|i| i as f64 * range / views as f64)
                    .collect();
                Ok(ScanGeometry::fan_covering(grid, angles)?)
            }
        }
    }
}

/// Complete description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSource,
    pub geometry: GeometrySource,
    pub noise_level: f64,
    pub solver: SolverConfig,
    /// Early-stop iteration count for the rapid phase.
    pub k: usize,
    pub network: NetworkSpec,
    pub training: TrainConfig,
    pub mode: TrainMode,
    pub output_dir: PathBuf,
    pub seeds: Seeds,
}

impl ExperimentConfig {
    /// Desk-scale default: 64×64 phantoms, 120/20 split, 60 views over 360°,
    /// 1% noise, K = 10, 100-epoch training. Sized to run end to end on a
    /// small CPU box while keeping every structural element of the full
    /// study.
    pub fn desk_default(output_dir: impl Into<PathBuf>) -> Self {
        let grid = GridSpec::unit(64).expect("valid grid");
        ExperimentConfig {
            name: "desk64".into(),
            dataset: DatasetSource::Generate {
                phantom: PhantomSpec::default_for(grid, 0),
                count: 140,
                train_count: 120,
            },
            geometry: GeometrySource::Protocol("P_360_60".into()),
            noise_level: 0.01,
            solver: SolverConfig::for_lambda(4e-5),
            k: 10,
            network: NetworkSpec {
                levels: 3,
                base_channels: 8,
                convs_per_level: 2,
                kernel_size: 3,
            },
            training: TrainConfig::with_epochs(100),
            mode: TrainMode::Rising,
            output_dir: output_dir.into(),
            seeds: Seeds {
                data: 101,
                noise: 202,
                init: 303,
                shuffle: 404,
            },
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: ExperimentConfig = serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        rising_tomo::atomic_write(path.as_ref(), &bytes)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k < 1 {
            return Err(PipelineError::InvalidConfig(
                "k must be at least 1".into(),
            ));
        }
        if !(self.noise_level >= 0.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "noise_level must be nonnegative, got {}",
                self.noise_level
            )));
        }
        if let DatasetSource::Generate {
            phantom,
            count,
            train_count,
        } = &self.dataset
        {
            phantom
                .validate()
                .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
            if *count < 1 || train_count > count {
                return Err(PipelineError::InvalidConfig(format!(
                    "dataset must have count >= 1 and train_count <= count, got {count}/{train_count}"
                )));
            }
        }
        self.solver
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.network
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// The grid ground truths live on.
    pub fn grid(&self) -> Result<GridSpec, PipelineError> {
        match &self.dataset {
            DatasetSource::Generate { phantom, .. } => Ok(phantom.grid),
            DatasetSource::Manifest { path } => {
                let m = rising_phantom::load_manifest(path)?;
                Ok(m.spec.grid)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocols_expand_to_declared_angle_lists() {
        let grid = GridSpec::unit(32).unwrap();
        let cases = [
            ("P_360_360", 360, 1.0),
            ("P_360_180", 180, 2.0),
            ("P_360_60", 60, 6.0),
            ("P_180_60", 60, 3.0),
        ];
        for (name, views, step) in cases {
            let geom = GeometrySource::Protocol(name.into()).expand(&grid).unwrap();
            assert_eq!(geom.num_views(), views, "{name}");
            assert_eq!(geom.angles_deg[0], 0.0);
            assert!((geom.angles_deg[1] - step).abs() < 1e-12, "{name}");
            // Expansion is deterministic.
            let again = GeometrySource::Protocol(name.into()).expand(&grid).unwrap();
            assert_eq!(geom, again);
        }
        // Brace form tolerated.
        let g = GeometrySource::Protocol("P_{360,60}".into()).expand(&grid).unwrap();
        assert_eq!(g.num_views(), 60);
    }

    #[test]
    fn bad_protocol_is_rejected() {
        let grid = GridSpec::unit(16).unwrap();
        for bad in ["P_0_60", "P_400_60", "nope", "P_360", "P_360_0"] {
            assert!(
                GeometrySource::Protocol(bad.into()).expand(&grid).is_err(),
                "{bad} should fail"
            );
        }
    }

    #[test]
    fn desk_default_validates_and_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::desk_default(dir.path());
        cfg.validate().unwrap();
        let p = dir.path().join("config.json");
        cfg.save(&p).unwrap();
        let back = ExperimentConfig::load(&p).unwrap();
        assert_eq!(cfg, back);
    }
}
