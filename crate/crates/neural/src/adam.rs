use serde::{Deserialize, Serialize};

use crate::train::TrainConfig;
use crate::{Gradients, NetworkParams, NeuralError, Real};

/// Adam moment decay rates and stabilizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one pair per layer, shaped like the
/// gradients.
pub struct AdamState<T> {
    m: Vec<(Vec<T>, Vec<T>)>,
    v: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Real> AdamState<T> {
    pub fn zeros_like(params: &NetworkParams<T>) -> Self {
        let zero = |layer: &crate::unet::ConvLayer<T>| {
            (
                vec![T::zero(); layer.weights.len()],
                vec![T::zero(); layer.bias.len()],
            )
        };
        AdamState {
            m: params.layers.iter().map(zero).collect(),
            v: params.layers.iter().map(zero).collect(),
        }
    }
}

/// Learning rate at `step` (0-based) under polynomial decay over
/// `total_steps`: `lr_end + (lr_start − lr_end)·(1 − step/total)^power`.
/// The endpoints are exact.
pub fn lr_at(cfg: &TrainConfig, step: usize, total_steps: usize) -> f64 {
    if step == 0 || total_steps == 0 {
        return cfg.lr_start;
    }
    if step >= total_steps {
        return cfg.lr_end;
    }
    let frac = 1.0 - step as f64 / total_steps as f64;
    cfg.lr_end + (cfg.lr_start - cfg.lr_end) * frac.powf(cfg.lr_power)
}

/// Global Euclidean norm over every parameter gradient; errors with the
/// layer name on the first non-finite value.
pub fn global_grad_norm<T: Real>(
    params: &NetworkParams<T>,
    grads: &Gradients<T>,
) -> Result<f64, NeuralError> {
    let mut sum = 0.0f64;
    for (layer, (gw, gb)) in params.layers.iter().zip(&grads.layers) {
        for g in gw.data().iter().map(|v| v.into_f64()).chain(gb.iter().map(|v| v.into_f64())) {
            if !g.is_finite() {
                return Err(NeuralError::NonFiniteGradient {
                    layer: layer.name.clone(),
                });
            }
            sum += g * g;
        }
    }
    Ok(sum.sqrt())
}

/// One bias-corrected Adam update at the scheduled learning rate,
/// `step_index` 1-based. The gradient is first clipped to global norm
/// `cfg.grad_clip`; when the norm is already within the bound the update is
/// bit-identical to the unclipped one. Returns the learning rate used.
pub fn adam_step<T: Real>(
    params: &mut NetworkParams<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    step_index: usize,
    total_steps: usize,
    cfg: &TrainConfig,
) -> Result<f64, NeuralError> {
    assert!(step_index >= 1, "step_index is 1-based");
    let norm = global_grad_norm(params, grads)?;
    let scale = if norm > cfg.grad_clip {
        T::from_f64(cfg.grad_clip / norm)
    } else {
        T::one()
    };

    let lr = lr_at(cfg, step_index - 1, total_steps);
    let lr_t = T::from_f64(lr);
    let b1 = T::from_f64(cfg.adam.beta1);
    let b2 = T::from_f64(cfg.adam.beta2);
    let eps = T::from_f64(cfg.adam.epsilon);
    let corr1 = T::from_f64(1.0 - cfg.adam.beta1.powi(step_index as i32));
    let corr2 = T::from_f64(1.0 - cfg.adam.beta2.powi(step_index as i32));
    let one = T::one();

    let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
        let g = if scale == one { g } else { g * scale };
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / corr1;
        let v_hat = *v / corr2;
        *p = *p - lr_t * m_hat / (v_hat.sqrt() + eps);
    };

    for ((layer, (gw, gb)), ((mw, mb), (vw, vb))) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for (((p, g), m), v) in layer
            .weights
            .data_mut()
            .iter_mut()
            .zip(gw.data())
            .zip(mw.iter_mut())
            .zip(vw.iter_mut())
        {
            update(p, *g, m, v);
        }
        for (((p, g), m), v) in layer
            .bias
            .iter_mut()
            .zip(gb)
            .zip(mb.iter_mut())
            .zip(vb.iter_mut())
        {
            update(p, *g, m, v);
        }
    }
    Ok(lr)
}
