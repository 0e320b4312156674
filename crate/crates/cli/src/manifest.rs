use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rising_phantom::PhantomSpec;
use rising_tomo::ScanGeometry;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::PipelineError;

pub use rising_phantom::Split;

/// One image's artifacts. File names are relative to the experiment
/// directory; absent stages leave `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub split: Split,
    /// Per-image generator stream selector.
    pub seed: u64,
    pub gt: String,
    #[serde(default)]
    pub sino: Option<String>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    /// Early-stopped reconstructions, keyed by the iteration count `k`.
    #[serde(default)]
    pub ris: BTreeMap<String, String>,
    #[serde(default)]
    pub is: Option<String>,
    /// Iteration at which the convergence tolerance fired (when it did).
    #[serde(default)]
    pub k_star: Option<usize>,
    #[serde(default)]
    pub is_iterations: Option<usize>,
    /// Relative error of the convergence image against the ground truth.
    #[serde(default)]
    pub re_is: Option<f64>,
    /// A solver failure recorded instead of aborting the batch.
    #[serde(default)]
    pub solver_error: Option<String>,
    /// Stage-name → config hash that produced each artifact of this entry.
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

/// Index of one experiment directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub phantom_spec: PhantomSpec,
    pub geometry: ScanGeometry,
    pub train_count: usize,
    pub entries: Vec<Entry>,
    /// Stage-name → config hash of the last completed run of that stage.
    #[serde(default)]
    pub stages: BTreeMap<String, String>,
}

impl ExperimentManifest {
    pub fn path_in(dir: &Path) -> PathBuf {
        dir.join("experiment.json")
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = Self::path_in(dir);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::Io {
            path: path.clone(),
            source: e,
        })?;
        serde_json::from_slice(&bytes)
            .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| PipelineError::Manifest(e.to_string()))?;
        rising_tomo::atomic_write(&Self::path_in(dir), &bytes)?;
        Ok(())
    }

    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Checks that every referenced file exists under `dir`; returns the
    /// missing ones.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        let mut missing = Vec::new();
        for e in &self.entries {
            let referenced = std::iter::once(&e.gt)
                .chain(e.sino.iter())
                .chain(e.is.iter())
                .chain(e.ris.values());
            for f in referenced {
                if !dir.join(f).exists() {
                    missing.push(f.clone());
                }
            }
        }
        missing
    }
}

/// Hash of a JSON-serializable configuration slice; stages use it to decide
/// whether their artifacts are already up to date.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config slices serialize");
    let mut hasher = Sha256::new();
    hasher.update(&json);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// SHA-256 of a file, for determinism checks.
pub fn file_sha256(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}
