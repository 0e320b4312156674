use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rising_metrics::{format_comparison_table, relative_error, rmse, ssim, MetricRecord, MetricsReport};
use rising_neural::{load_checkpoint, network_forward, save_checkpoint, train, CheckpointMeta};
use rising_phantom::generate_dataset;
use rising_solver::{sgp_resume, sgp_solve, SolveMode, SolveOptions};
use rising_tomo::{read_image, read_sinogram, simulate_sinogram, write_image, write_sinogram, Image};

use crate::config::{DatasetSource, ExperimentConfig, TrainMode};
use crate::manifest::{config_hash, Entry, ExperimentManifest, Split};
use crate::PipelineError;

/// Mixes the experiment noise seed with an image index into an independent
/// per-image seed (splitmix64 finalizer).
fn derived_noise_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn stage_is_current(manifest: &ExperimentManifest, stage: &str, hash: &str, force: bool) -> bool {
    !force && manifest.stages.get(stage).map(String::as_str) == Some(hash)
}

/// Builds (or reuses) the ground-truth dataset and initializes the
/// experiment manifest.
pub fn cmd_generate_data(
    cfg: &ExperimentConfig,
    force: bool,
) -> Result<ExperimentManifest, PipelineError> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let geometry = cfg.geometry.expand(&cfg.grid()?)?;

    let (phantom_spec, count, train_count) = match &cfg.dataset {
        DatasetSource::Generate {
            phantom,
            count,
            train_count,
        } => {
            let mut spec = phantom.clone();
            // The family seed comes from the experiment's seed block.
            spec.seed = cfg.seeds.data;
            (spec, *count, *train_count)
        }
        DatasetSource::Manifest { path } => {
            let m = rising_phantom::load_manifest(path)?;
            let src_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
            let hash = config_hash(&("generate-data", &m.spec, m.entries.len(), m.train_count));
            if let Ok(existing) = ExperimentManifest::load(dir) {
                if stage_is_current(&existing, "generate-data", &hash, force) {
                    return Ok(existing);
                }
            }
            // Import the externally supplied images into the experiment dir.
            let mut entries = Vec::with_capacity(m.entries.len());
            for e in &m.entries {
                let img = read_image(src_dir.join(&e.file), m.spec.grid.pixel_size)?;
                let file = format!("gt_{}.imgraw", e.id);
                write_image(dir.join(&file), &img)?;
                entries.push(Entry {
                    id: e.id.clone(),
                    split: e.split,
                    seed: e.seed,
                    gt: file,
                    sino: None,
                    noise_seed: None,
                    ris: BTreeMap::new(),
                    is: None,
                    k_star: None,
                    is_iterations: None,
                    re_is: None,
                    solver_error: None,
                    provenance: BTreeMap::from([("generate-data".into(), hash.clone())]),
                });
            }
            let mut manifest = ExperimentManifest {
                phantom_spec: m.spec.clone(),
                geometry,
                train_count: m.train_count,
                entries,
                stages: BTreeMap::new(),
            };
            manifest.stages.insert("generate-data".into(), hash);
            manifest.save(dir)?;
            return Ok(manifest);
        }
    };

    let hash = config_hash(&("generate-data", &phantom_spec, count, train_count));
    if let Ok(existing) = ExperimentManifest::load(dir) {
        if stage_is_current(&existing, "generate-data", &hash, force) {
            return Ok(existing);
        }
    }

    let dataset = generate_dataset(&phantom_spec, count, train_count, dir)?;
    let entries = dataset
        .entries
        .iter()
        .map(|e| Entry {
            id: e.id.clone(),
            split: e.split,
            seed: e.seed,
            gt: e.file.clone(),
            sino: None,
            noise_seed: None,
            ris: BTreeMap::new(),
            is: None,
            k_star: None,
            is_iterations: None,
            re_is: None,
            solver_error: None,
            provenance: BTreeMap::from([("generate-data".into(), hash.clone())]),
        })
        .collect();
    let mut manifest = ExperimentManifest {
        phantom_spec,
        geometry,
        train_count,
        entries,
        stages: BTreeMap::new(),
    };
    manifest.stages.insert("generate-data".into(), hash);
    manifest.save(dir)?;
    Ok(manifest)
}

/// Simulates one noisy sinogram per ground truth.
pub fn cmd_simulate(
    cfg: &ExperimentConfig,
    force: bool,
) -> Result<ExperimentManifest, PipelineError> {
    let dir = &cfg.output_dir;
    let mut manifest = ExperimentManifest::load(dir)?;
    let parent = manifest.stages.get("generate-data").cloned().unwrap_or_default();
    let hash = config_hash(&("simulate", &parent, &manifest.geometry, cfg.noise_level, cfg.seeds.noise));
    if stage_is_current(&manifest, "simulate", &hash, force) {
        return Ok(manifest);
    }

    let px = manifest.phantom_spec.grid.pixel_size;
    let geometry = manifest.geometry.clone();
    let results: Vec<(String, u64)> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<(String, u64), PipelineError> {
            let gt = read_image(dir.join(&entry.gt), px)?;
            let seed = derived_noise_seed(cfg.seeds.noise, entry.seed);
            let sino = simulate_sinogram(&gt, &geometry, cfg.noise_level, seed)?;
            let file = format!("sino_{}.sinraw", entry.id);
            write_sinogram(dir.join(&file), &sino)?;
            Ok((file, seed))
        })
        .collect::<Result<_, _>>()?;

    for (entry, (file, seed)) in manifest.entries.iter_mut().zip(results) {
        entry.sino = Some(file);
        entry.noise_seed = Some(seed);
        entry.provenance.insert("simulate".into(), hash.clone());
    }
    manifest.stages.insert("simulate".into(), hash);
    manifest.save(dir)?;
    Ok(manifest)
}

fn require_sinograms(manifest: &ExperimentManifest, stage: &str) -> Result<(), PipelineError> {
    let missing: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| e.sino.is_none())
        .map(|e| e.id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::MissingArtifacts {
            stage: stage.into(),
            missing,
        })
    }
}

/// Runs the solver to convergence per image, storing the target images the
/// network will learn to reach. This is the offline, time-unconstrained
/// stage; per-image solver failures are recorded, not fatal.
pub fn cmd_build_targets(
    cfg: &ExperimentConfig,
    force: bool,
) -> Result<ExperimentManifest, PipelineError> {
    let dir = &cfg.output_dir;
    let mut manifest = ExperimentManifest::load(dir)?;
    require_sinograms(&manifest, "build-targets")?;
    let parent = manifest.stages.get("simulate").cloned().unwrap_or_default();
    let hash = config_hash(&("build-targets", &parent, &cfg.solver));
    if stage_is_current(&manifest, "build-targets", &hash, force) {
        return Ok(manifest);
    }

    let grid = manifest.phantom_spec.grid;
    let geometry = manifest.geometry.clone();
    struct TargetResult {
        file: Option<String>,
        k_star: Option<usize>,
        iterations: Option<usize>,
        re: Option<f64>,
        error: Option<String>,
    }
    let results: Vec<TargetResult> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<TargetResult, PipelineError> {
            let sino_file = entry.sino.as_ref().expect("checked above");
            let sino = read_sinogram(dir.join(sino_file), geometry.clone())?;
            match sgp_solve(
                &sino,
                &grid,
                &cfg.solver,
                SolveMode::ToConvergence,
                &SolveOptions::default(),
            ) {
                Ok((x_is, report)) => {
                    let file = format!("is_{}.imgraw", entry.id);
                    write_image(dir.join(&file), &x_is)?;
                    let report_csv = format!("solve_{}.csv", entry.id);
                    rising_tomo::atomic_write(
                        &dir.join(report_csv),
                        report.to_csv().as_bytes(),
                    )?;
                    let gt = read_image(dir.join(&entry.gt), grid.pixel_size)?;
                    let re = relative_error(&x_is, &gt)?;
                    Ok(TargetResult {
                        file: Some(file),
                        k_star: report.k_star,
                        iterations: Some(report.iterations),
                        re: Some(re),
                        error: None,
                    })
                }
                Err(e) => Ok(TargetResult {
                    file: None,
                    k_star: None,
                    iterations: None,
                    re: None,
                    error: Some(e.to_string()),
                }),
            }
        })
        .collect::<Result<_, _>>()?;

    for (entry, r) in manifest.entries.iter_mut().zip(results) {
        entry.is = r.file;
        entry.k_star = r.k_star;
        entry.is_iterations = r.iterations;
        entry.re_is = r.re;
        entry.solver_error = r.error;
        entry.provenance.insert("build-targets".into(), hash.clone());
    }
    manifest.stages.insert("build-targets".into(), hash);
    manifest.save(dir)?;
    Ok(manifest)
}

/// Runs exactly `cfg.k` solver iterations per image, producing the rapid
/// reconstructions the network starts from. Uses the same solver
/// configuration as the target stage so the two runs share their iteration
/// prefix.
pub fn cmd_build_ris(
    cfg: &ExperimentConfig,
    force: bool,
) -> Result<ExperimentManifest, PipelineError> {
    let dir = &cfg.output_dir;
    let mut manifest = ExperimentManifest::load(dir)?;
    require_sinograms(&manifest, "build-ris")?;
    let parent = manifest.stages.get("simulate").cloned().unwrap_or_default();
    let stage = format!("build-ris:k={}", cfg.k);
    let hash = config_hash(&("build-ris", &parent, &cfg.solver, cfg.k));
    if stage_is_current(&manifest, &stage, &hash, force) {
        return Ok(manifest);
    }

    let grid = manifest.phantom_spec.grid;
    let geometry = manifest.geometry.clone();
    let results: Vec<Result<String, String>> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<Result<String, String>, PipelineError> {
            let sino_file = entry.sino.as_ref().expect("checked above");
            let sino = read_sinogram(dir.join(sino_file), geometry.clone())?;
            match sgp_solve(
                &sino,
                &grid,
                &cfg.solver,
                SolveMode::FixedK(cfg.k),
                &SolveOptions::default(),
            ) {
                Ok((x_ris, _)) => {
                    let file = format!("ris_k{}_{}.imgraw", cfg.k, entry.id);
                    write_image(dir.join(&file), &x_ris)?;
                    Ok(Ok(file))
                }
                Err(e) => Ok(Err(e.to_string())),
            }
        })
        .collect::<Result<_, _>>()?;

    for (entry, r) in manifest.entries.iter_mut().zip(results) {
        match r {
            Ok(file) => {
                entry.ris.insert(cfg.k.to_string(), file);
            }
            Err(e) => entry.solver_error = Some(e),
        }
        entry.provenance.insert(stage.clone(), hash.clone());
    }
    manifest.stages.insert(stage, hash);
    manifest.save(dir)?;
    Ok(manifest)
}

/// Result of a training stage.
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub final_loss: f64,
    /// False when an up-to-date checkpoint was reused.
    pub trained_now: bool,
}

fn checkpoint_name(mode: TrainMode, k: usize) -> String {
    let m = match mode {
        TrainMode::Rising => "rising",
        TrainMode::Lpp => "lpp",
    };
    format!("checkpoint_{m}_k{k}.ckpt")
}

/// Trains the network on the train split: inputs are the rapid
/// reconstructions; targets are convergence images (iteration completion)
/// or ground truths (post-processing), per `cfg.mode`.
pub fn cmd_train(cfg: &ExperimentConfig, force: bool) -> Result<TrainOutcome, PipelineError> {
    let dir = &cfg.output_dir;
    let mut manifest = ExperimentManifest::load(dir)?;
    let grid = manifest.phantom_spec.grid;
    let kkey = cfg.k.to_string();

    let mut missing = Vec::new();
    for e in manifest.entries_for(Split::Train) {
        if e.ris.get(&kkey).is_none() {
            missing.push(format!("{}: ris(k={})", e.id, cfg.k));
        }
        if cfg.mode == TrainMode::Rising && e.is.is_none() {
            missing.push(format!("{}: is", e.id));
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingArtifacts {
            stage: "train".into(),
            missing,
        });
    }

    let ris_stage = format!("build-ris:k={}", cfg.k);
    let target_parent = match cfg.mode {
        TrainMode::Rising => manifest.stages.get("build-targets").cloned(),
        TrainMode::Lpp => manifest.stages.get("generate-data").cloned(),
    }
    .unwrap_or_default();
    let ris_parent = manifest.stages.get(&ris_stage).cloned().unwrap_or_default();
    let stage = format!(
        "train:{}:k={}",
        match cfg.mode {
            TrainMode::Rising => "rising",
            TrainMode::Lpp => "lpp",
        },
        cfg.k
    );
    let hash = config_hash(&(
        "train",
        &ris_parent,
        &target_parent,
        &cfg.network,
        &cfg.training,
        cfg.seeds.init,
        cfg.mode,
        cfg.k,
    ));
    let ckpt_path = dir.join(checkpoint_name(cfg.mode, cfg.k));
    let log_path = dir.join(format!(
        "training_log_{}_k{}.csv",
        match cfg.mode {
            TrainMode::Rising => "rising",
            TrainMode::Lpp => "lpp",
        },
        cfg.k
    ));
    if stage_is_current(&manifest, &stage, &hash, force) && ckpt_path.exists() {
        let (_, meta) = load_checkpoint::<f32>(&ckpt_path)?;
        return Ok(TrainOutcome {
            checkpoint: ckpt_path,
            log: log_path,
            final_loss: meta.loss_history.last().copied().unwrap_or(f64::NAN),
            trained_now: false,
        });
    }

    let mut pairs = Vec::new();
    for e in manifest.entries_for(Split::Train) {
        let ris = read_image(dir.join(&e.ris[&kkey]), grid.pixel_size)?;
        let target_file = match cfg.mode {
            TrainMode::Rising => e.is.as_ref().expect("checked above").clone(),
            TrainMode::Lpp => e.gt.clone(),
        };
        let target = read_image(dir.join(&target_file), grid.pixel_size)?;
        pairs.push((ris, target));
    }

    let (params, log) = train::<f32>(&pairs, cfg.network, &cfg.training, cfg.seeds.init)?;
    let meta = CheckpointMeta {
        epoch: cfg.training.epochs,
        loss_history: log.epochs.iter().map(|e| e.mean_loss).collect(),
        provenance: serde_json::to_value(cfg)
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?,
    };
    save_checkpoint(&ckpt_path, &params, &meta)?;
    rising_tomo::atomic_write(&log_path, log.to_csv().as_bytes())?;

    manifest.stages.insert(stage, hash);
    manifest.save(dir)?;
    Ok(TrainOutcome {
        checkpoint: ckpt_path,
        log: log_path,
        final_loss: log.final_loss().unwrap_or(f64::NAN),
        trained_now: true,
    })
}

/// Verifies that a checkpoint was produced under the same grid, geometry
/// and early-stop count as the requesting config.
fn check_provenance(
    cfg: &ExperimentConfig,
    meta: &CheckpointMeta,
) -> Result<ExperimentConfig, PipelineError> {
    let ckpt_cfg: ExperimentConfig = serde_json::from_value(meta.provenance.clone())
        .map_err(|e| PipelineError::ProvenanceMismatch(format!("unreadable provenance: {e}")))?;
    let grid = cfg.grid()?;
    let ckpt_grid = ckpt_cfg.grid()?;
    if grid != ckpt_grid {
        return Err(PipelineError::ProvenanceMismatch(format!(
            "grid {:?} vs checkpoint {:?}",
            grid, ckpt_grid
        )));
    }
    let geom = cfg.geometry.expand(&grid)?;
    let ckpt_geom = ckpt_cfg.geometry.expand(&ckpt_grid)?;
    if geom != ckpt_geom {
        return Err(PipelineError::ProvenanceMismatch(
            "acquisition geometry differs from the checkpoint's".into(),
        ));
    }
    if cfg.k != ckpt_cfg.k {
        return Err(PipelineError::ProvenanceMismatch(format!(
            "k = {} vs checkpoint k = {}",
            cfg.k, ckpt_cfg.k
        )));
    }
    Ok(ckpt_cfg)
}

/// End-to-end inference outcome with per-phase wall clock.
pub struct ReconstructOutcome {
    pub image: Image,
    pub ris_image: Image,
    pub solver_seconds: f64,
    pub network_seconds: f64,
}

/// Reconstructs one sinogram: `k` solver iterations, then the network.
pub fn cmd_reconstruct(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    sinogram: &Path,
    out: Option<&Path>,
) -> Result<ReconstructOutcome, PipelineError> {
    let (params, meta) = load_checkpoint::<f32>(checkpoint)?;
    check_provenance(cfg, &meta)?;
    let grid = cfg.grid()?;
    let geometry = cfg.geometry.expand(&grid)?;
    let sino = read_sinogram(sinogram, geometry)?;

    let t0 = Instant::now();
    let (x_ris, _) = sgp_solve(
        &sino,
        &grid,
        &cfg.solver,
        SolveMode::FixedK(cfg.k),
        &SolveOptions::default(),
    )?;
    let solver_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let outputs = network_forward(&params, &[&x_ris])?;
    let network_seconds = t1.elapsed().as_secs_f64();
    let image = outputs.into_iter().next().expect("one output per input");

    if let Some(path) = out {
        write_image(path, &image)?;
    }
    Ok(ReconstructOutcome {
        image,
        ris_image: x_ris,
        solver_seconds,
        network_seconds,
    })
}

/// Evaluation artifacts: per-image metrics, aggregates, learnability rows.
pub struct EvaluationOutcome {
    pub report: MetricsReport,
    /// Per test image: `(id, rmse(ris, is), rmse(net, is))`.
    pub learnability: Vec<(String, f64, f64)>,
    pub table: String,
    pub metrics_csv: PathBuf,
    pub learnability_csv: PathBuf,
    /// Role label of the network output (`x_ING` or `x_LPP`).
    pub net_role: String,
}

/// Scores the test split: RE/RMSE/SSIM against the ground truth for the
/// rapid, network and convergence images, plus RMSE against the convergence
/// image for the learnability view.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
) -> Result<EvaluationOutcome, PipelineError> {
    let dir = &cfg.output_dir;
    let manifest = ExperimentManifest::load(dir)?;
    let grid = manifest.phantom_spec.grid;
    let (params, meta) = load_checkpoint::<f32>(checkpoint)?;
    let ckpt_cfg = check_provenance(cfg, &meta)?;
    let net_role = ckpt_cfg.mode.output_role().to_string();
    let kkey = cfg.k.to_string();

    let test_entries: Vec<&Entry> = manifest.entries_for(Split::Test).collect();
    if test_entries.is_empty() {
        return Err(PipelineError::Manifest("test split is empty".into()));
    }
    let mut missing = Vec::new();
    for e in &test_entries {
        if e.ris.get(&kkey).is_none() {
            missing.push(format!("{}: ris(k={})", e.id, cfg.k));
        }
        if e.is.is_none() {
            missing.push(format!("{}: is", e.id));
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingArtifacts {
            stage: "evaluate".into(),
            missing,
        });
    }

    let mut records = Vec::new();
    let mut learnability = Vec::new();
    for e in &test_entries {
        let gt = read_image(dir.join(&e.gt), grid.pixel_size)?;
        let ris = read_image(dir.join(&e.ris[&kkey]), grid.pixel_size)?;
        let is = read_image(dir.join(e.is.as_ref().unwrap()), grid.pixel_size)?;
        let net = network_forward(&params, &[&ris])?
            .into_iter()
            .next()
            .expect("one output");

        for (role, img) in [("x_RIS", &ris), (net_role.as_str(), &net), ("x_IS", &is)] {
            records.push(MetricRecord {
                id: e.id.clone(),
                role: role.to_string(),
                re: relative_error(img, &gt)?,
                rmse: rmse(img, &gt)?,
                ssim: ssim(img, &gt)?,
            });
        }
        learnability.push((e.id.clone(), rmse(&ris, &is)?, rmse(&net, &is)?));
    }

    let report = MetricsReport::new(records);
    let mode_tag = match ckpt_cfg.mode {
        TrainMode::Rising => "rising",
        TrainMode::Lpp => "lpp",
    };
    let metrics_csv = dir.join(format!("metrics_{mode_tag}_k{}.csv", cfg.k));
    rising_tomo::atomic_write(&metrics_csv, report.to_csv().as_bytes())?;

    let mut lcsv = String::from("id,rmse_ris_vs_is,rmse_net_vs_is\n");
    for (id, a, b) in &learnability {
        lcsv.push_str(&format!("{id},{a:.8},{b:.8}\n"));
    }
    let learnability_csv = dir.join(format!("learnability_{mode_tag}_k{}.csv", cfg.k));
    rising_tomo::atomic_write(&learnability_csv, lcsv.as_bytes())?;

    let label = format!("{} (K={})", cfg.name, cfg.k);
    let table = format_comparison_table(&[(label, &report)]);
    rising_tomo::atomic_write(
        &dir.join(format!("table_{mode_tag}_k{}.txt", cfg.k)),
        table.as_bytes(),
    )?;

    Ok(EvaluationOutcome {
        report,
        learnability,
        table,
        metrics_csv,
        learnability_csv,
        net_role,
    })
}

/// Extracts one row segment of pixel intensities per image as CSV columns,
/// for profile plots.
pub fn cmd_profile(
    images: &[PathBuf],
    row: usize,
    col_range: std::ops::Range<usize>,
) -> Result<String, PipelineError> {
    if images.is_empty() {
        return Err(PipelineError::InvalidConfig("no images given".into()));
    }
    let loaded: Vec<(String, Image)> = images
        .iter()
        .map(|p| -> Result<(String, Image), PipelineError> {
            let img = read_image(p, 1.0)?;
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, img))
        })
        .collect::<Result<_, _>>()?;
    let n = loaded[0].1.n();
    for (name, img) in &loaded {
        if img.n() != n {
            return Err(PipelineError::InvalidConfig(format!(
                "{name} is {}×{}, expected {n}×{n}",
                img.n(),
                img.n()
            )));
        }
    }
    if row >= n || col_range.end > n || col_range.start >= col_range.end {
        return Err(PipelineError::InvalidConfig(format!(
            "profile row {row}, cols {col_range:?} out of range for {n}×{n} images"
        )));
    }

    let mut csv = String::from("col");
    for (name, _) in &loaded {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for c in col_range {
        csv.push_str(&format!("{c}"));
        for (_, img) in &loaded {
            csv.push_str(&format!(",{:.8}", img.at(row, c)));
        }
        csv.push('\n');
    }
    Ok(csv)
}

/// Continues the solver from `k` to convergence for one sinogram — the
/// work the network replaces; used for speedup comparisons.
pub fn remaining_iterations_seconds(
    cfg: &ExperimentConfig,
    sinogram: &Path,
) -> Result<f64, PipelineError> {
    let grid = cfg.grid()?;
    let geometry = cfg.geometry.expand(&grid)?;
    let sino = read_sinogram(sinogram, geometry)?;
    let (_, early) = sgp_solve(
        &sino,
        &grid,
        &cfg.solver,
        SolveMode::FixedK(cfg.k),
        &SolveOptions::default(),
    )?;
    let t0 = Instant::now();
    let _ = sgp_resume(
        &sino,
        &grid,
        &cfg.solver,
        early.final_state,
        SolveMode::ToConvergence,
        &SolveOptions::default(),
    )?;
    Ok(t0.elapsed().as_secs_f64())
}
