use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rising_cli::{
    cmd_build_ris, cmd_build_targets, cmd_evaluate, cmd_generate_data, cmd_profile,
    cmd_reconstruct, cmd_simulate, cmd_train, ExperimentConfig, PipelineError, TrainMode,
};

/// Sparse-view CT reconstruction toolkit: an early-stopped TV-regularized
/// solver completed by a learned network.
#[derive(Parser)]
#[command(name = "rising", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the early-stop iteration count.
    #[arg(long)]
    k: Option<usize>,
    /// Override the training mode (rising | lpp).
    #[arg(long)]
    mode: Option<String>,
    /// Override the phantom-family seed.
    #[arg(long = "seed-data")]
    seed_data: Option<u64>,
    /// Override the measurement-noise seed.
    #[arg(long = "seed-noise")]
    seed_noise: Option<u64>,
    /// Override the weight-init seed.
    #[arg(long = "seed-init")]
    seed_init: Option<u64>,
    /// Override the shuffle seed.
    #[arg(long = "seed-shuffle")]
    seed_shuffle: Option<u64>,
    /// Redo the stage even if its config hash is unchanged.
    #[arg(long)]
    force: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, PipelineError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = match mode.as_str() {
                "rising" => TrainMode::Rising,
                "lpp" => TrainMode::Lpp,
                other => {
                    return Err(PipelineError::InvalidConfig(format!(
                        "unknown mode {other:?}; expected rising or lpp"
                    )))
                }
            };
        }
        if let Some(s) = self.seed_data {
            cfg.seeds.data = s;
        }
        if let Some(s) = self.seed_noise {
            cfg.seeds.noise = s;
        }
        if let Some(s) = self.seed_init {
            cfg.seeds.init = s;
        }
        if let Some(s) = self.seed_shuffle {
            cfg.seeds.shuffle = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a desk-scale default config to the given path.
    InitConfig {
        /// Where to write the config JSON.
        path: PathBuf,
        /// Experiment output directory the config will point at.
        #[arg(long, default_value = "runs/desk64")]
        output_dir: PathBuf,
    },
    /// Generate (or import) the ground-truth dataset.
    GenerateData(ConfigArgs),
    /// Simulate noisy sinograms for every ground truth.
    Simulate(ConfigArgs),
    /// Run the solver to convergence per image (training targets).
    BuildTargets(ConfigArgs),
    /// Run exactly K solver iterations per image (network inputs).
    BuildRis(ConfigArgs),
    /// Train the network on the train split.
    Train(ConfigArgs),
    /// Reconstruct a single sinogram end to end with a checkpoint.
    Reconstruct {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sinogram: PathBuf,
        /// Output image path (.imgraw).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score the test split against the ground truths.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Extract intensity profiles along one image row as CSV.
    Profile {
        /// Images to sample (.imgraw).
        images: Vec<PathBuf>,
        #[arg(long)]
        row: usize,
        #[arg(long, default_value_t = 0)]
        col_start: usize,
        /// Exclusive end column; defaults to the image width.
        #[arg(long)]
        col_end: Option<usize>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("RISING_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run() -> Result<(), PipelineError> {
    let cli = Cli::parse();
    init_thread_pool();
    match cli.command {
        Command::InitConfig { path, output_dir } => {
            let cfg = ExperimentConfig::desk_default(output_dir);
            cfg.save(&path)?;
            println!("wrote {}", path.display());
        }
        Command::GenerateData(args) => {
            let cfg = args.load()?;
            let manifest = cmd_generate_data(&cfg, args.force)?;
            println!(
                "dataset ready: {} images ({} train) in {}",
                manifest.entries.len(),
                manifest.train_count,
                cfg.output_dir.display()
            );
        }
        Command::Simulate(args) => {
            let cfg = args.load()?;
            let manifest = cmd_simulate(&cfg, args.force)?;
            println!(
                "simulated {} sinograms at noise level {}",
                manifest.entries.len(),
                cfg.noise_level
            );
        }
        Command::BuildTargets(args) => {
            let cfg = args.load()?;
            let manifest = cmd_build_targets(&cfg, args.force)?;
            let failures = manifest
                .entries
                .iter()
                .filter(|e| e.solver_error.is_some())
                .count();
            let kstars: Vec<usize> = manifest.entries.iter().filter_map(|e| e.k_star).collect();
            let (lo, hi) = (
                kstars.iter().min().copied().unwrap_or(0),
                kstars.iter().max().copied().unwrap_or(0),
            );
            println!(
                "targets built for {} images ({failures} failures); convergence iterations in [{lo}, {hi}]",
                manifest.entries.len()
            );
        }
        Command::BuildRis(args) => {
            let cfg = args.load()?;
            let manifest = cmd_build_ris(&cfg, args.force)?;
            println!(
                "rapid reconstructions built at K={} for {} images",
                cfg.k,
                manifest.entries.len()
            );
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            let outcome = cmd_train(&cfg, args.force)?;
            println!(
                "{} final loss {:.6e} -> {}",
                if outcome.trained_now { "trained;" } else { "checkpoint up to date;" },
                outcome.final_loss,
                outcome.checkpoint.display()
            );
        }
        Command::Reconstruct {
            config,
            checkpoint,
            sinogram,
            out,
        } => {
            let cfg = config.load()?;
            let outcome = cmd_reconstruct(&cfg, &checkpoint, &sinogram, out.as_deref())?;
            println!(
                "reconstructed: solver phase {:.3} s, network phase {:.3} s",
                outcome.solver_seconds, outcome.network_seconds
            );
        }
        Command::Evaluate { config, checkpoint } => {
            let cfg = config.load()?;
            let outcome = cmd_evaluate(&cfg, &checkpoint)?;
            println!("{}", outcome.table);
            println!("per-image metrics: {}", outcome.metrics_csv.display());
            println!("learnability: {}", outcome.learnability_csv.display());
        }
        Command::Profile {
            images,
            row,
            col_start,
            col_end,
            out,
        } => {
            let end = match col_end {
                Some(e) => e,
                None => {
                    let first = images.first().ok_or_else(|| {
                        PipelineError::InvalidConfig("no images given".into())
                    })?;
                    rising_tomo::read_image(first, 1.0)?.n()
                }
            };
            let csv = cmd_profile(&images, row, col_start..end)?;
            match out {
                Some(path) => {
                    rising_tomo::atomic_write(&path, csv.as_bytes())?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "kind": err.kind(),
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
