use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rising_tomo::{read_image, write_image, Image};
use serde::{Deserialize, Serialize};

use crate::{generate_phantom, PhantomError, PhantomSpec};

/// Train/test assignment of one dataset entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Image file name, relative to the manifest directory.
    pub file: String,
    /// Per-image stream selector passed to the generator.
    pub seed: u64,
    pub split: Split,
}

/// Index of a generated dataset: the spec that produced it plus one entry
/// per image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: PhantomSpec,
    pub train_count: usize,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PhantomError> {
        let bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| PhantomError::Manifest(e.to_string()))?;
        rising_tomo::atomic_write(path.as_ref(), &bytes).map_err(PhantomError::Tomo)
    }

    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, PhantomError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| PhantomError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| PhantomError::Manifest(e.to_string()))
}

/// Generates `count` phantoms into `out_dir` (`phantom_0000.imgraw`, ...),
/// the first `train_count` tagged as the training split, and writes
/// `manifest.json` alongside them.
pub fn generate_dataset(
    spec: &PhantomSpec,
    count: usize,
    train_count: usize,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest, PhantomError> {
    spec.validate()?;
    if count < 1 {
        return Err(PhantomError::Invalid {
            what: "dataset count",
            why: "must be at least 1".into(),
        });
    }
    if train_count > count {
        return Err(PhantomError::Invalid {
            what: "train count",
            why: format!("{train_count} exceeds dataset size {count}"),
        });
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| PhantomError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;

    let indices: Vec<u64> = (0..count as u64).collect();
    let entries: Vec<ManifestEntry> = indices
        .par_iter()
        .map(|&index| -> Result<ManifestEntry, PhantomError> {
            let image = generate_phantom(spec, index)?;
            let file = format!("phantom_{index:04}.imgraw");
            write_image(out_dir.join(&file), &image)?;
            Ok(ManifestEntry {
                id: format!("phantom_{index:04}"),
                file,
                seed: index,
                split: if (index as usize) < train_count {
                    Split::Train
                } else {
                    Split::Test
                },
            })
        })
        .collect::<Result<_, _>>()?;

    let manifest = DatasetManifest {
        spec: spec.clone(),
        train_count,
        entries,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Builds a manifest around externally supplied `.imgraw` ground truths,
/// validating that each is square, matches `spec.grid`, and lies in [0, 1].
pub fn import_external(
    spec: &PhantomSpec,
    files: &[PathBuf],
    train_count: usize,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest, PhantomError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| PhantomError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut entries = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let image: Image = read_image(path, spec.grid.pixel_size)?;
        if image.n() != spec.grid.n {
            return Err(PhantomError::Invalid {
                what: "imported image",
                why: format!("{} is {}×{}, expected {}", path.display(), image.n(), image.n(), spec.grid.n),
            });
        }
        if image.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(PhantomError::Invalid {
                what: "imported image",
                why: format!("{} has values outside [0, 1]", path.display()),
            });
        }
        let file = format!("import_{i:04}.imgraw");
        write_image(out_dir.join(&file), &image)?;
        entries.push(ManifestEntry {
            id: format!("import_{i:04}"),
            file,
            seed: i as u64,
            split: if i < train_count { Split::Train } else { Split::Test },
        });
    }
    let manifest = DatasetManifest {
        spec: spec.clone(),
        train_count,
        entries,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}
