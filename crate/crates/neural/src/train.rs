use rising_tomo::rng::{purpose, SeedStream};
use rising_tomo::Image;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::layers::mse_loss;
use crate::unet::{images_to_batch, NetworkParams, NetworkSpec};
use crate::{NeuralError, Real};

/// Optimization schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Polynomial learning-rate decay endpoints and exponent.
    pub lr_start: f64,
    pub lr_end: f64,
    pub lr_power: f64,
    /// Global-norm gradient clip.
    pub grad_clip: f64,
    pub adam: AdamConfig,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    pub fn with_epochs(epochs: usize) -> Self {
        TrainConfig {
            epochs,
            batch_size: 8,
            lr_start: 1e-3,
            lr_end: 1e-5,
            lr_power: 1.0,
            grad_clip: 5.0,
            adam: AdamConfig::default(),
            shuffle_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |msg: String| Err(NeuralError::InvalidTrainConfig(msg));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr_start > 0.0) || !(self.lr_end > 0.0) || self.lr_end > self.lr_start {
            return bad(format!(
                "learning rates must be positive with lr_end <= lr_start, got {} -> {}",
                self.lr_start, self.lr_end
            ));
        }
        if !(self.lr_power > 0.0) {
            return bad(format!("lr_power must be positive, got {}", self.lr_power));
        }
        if !(self.grad_clip > 0.0) {
            return bad(format!("grad_clip must be positive, got {}", self.grad_clip));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,lr\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.10e},{:.6e}\n", e.epoch, e.mean_loss, e.lr));
        }
        out
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_loss)
    }
}

/// Trains a fresh network on `(input, target)` pairs with seeded epoch
/// shuffling, mini-batch MSE and Adam. Deterministic given the spec, config
/// and seeds.
pub fn train<T: Real>(
    pairs: &[(Image, Image)],
    spec: NetworkSpec,
    cfg: &TrainConfig,
    init_seed: u64,
) -> Result<(NetworkParams<T>, TrainingLog), NeuralError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let n_samples = pairs.len();
    let batches_per_epoch = n_samples.div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * batches_per_epoch;

    let mut params = NetworkParams::<T>::init(spec, init_seed)?;
    let mut state = AdamState::zeros_like(&params);
    let mut log = TrainingLog::default();
    let mut step = 0usize;

    let mut order: Vec<usize> = (0..n_samples).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = SeedStream::new([purpose::SHUFFLE, cfg.shuffle_seed, epoch as u64, 0]);
        for i in 0..order.len() {
            order[i] = i;
        }
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        let mut lr_last = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<&Image> = chunk.iter().map(|&i| &pairs[i].0).collect();
            let targets: Vec<&Image> = chunk.iter().map(|&i| &pairs[i].1).collect();
            let x = images_to_batch::<T>(&inputs)?;
            let t = images_to_batch::<T>(&targets)?;

            let (out, trace) = params.forward_trace(&x)?;
            let (loss, grad_out) = mse_loss(&out, &t)?;
            let grads = params.backward(&trace, &grad_out)?;

            step += 1;
            lr_last = adam_step(&mut params, &grads, &mut state, step, total_steps, cfg)?;
            loss_sum += loss.into_f64() * chunk.len() as f64;
        }
        log.epochs.push(EpochLog {
            epoch,
            mean_loss: loss_sum / n_samples as f64,
            lr: lr_last,
        });
    }
    Ok((params, log))
}
