//! Residual U-Net for image-to-image restoration.
//!
//! Encoder levels of `convs_per_level` conv+ReLU blocks with 2× max pooling,
//! a bottleneck, then a decoder of nearest-neighbor upsampling, a
//! channel-reducing conv, an additive skip from the matching encoder level
//! and further conv+ReLU blocks. A final conv maps back to one channel; the
//! raw input is added to that pre-activation (global residual), a tanh is
//! applied, and the result is mapped affinely to `TANH_SPAN·t + 0.5`.
//! Inputs are consumed in `[0, 1]` directly; [`network_forward`] clamps to
//! `[0, 1]` at the image boundary.
//!
//! The affine span is deliberately wider than the image range: mapping tanh
//! onto exactly `[0, 1]` would place the value 0 — the dominant background
//! level of the training targets — at full saturation, and the optimizer
//! then drives the pre-activations there and stalls on dead gradients.

use rising_tomo::rng::{purpose, SeedStream};
use rising_tomo::{GridSpec, Image};
use serde::{Deserialize, Serialize};

use crate::layers::{
    conv2d_backward, conv2d_forward, maxpool2_backward, maxpool2_forward, relu_backward,
    relu_forward, tanh_backward, tanh_forward, upsample2_backward, upsample2_forward,
};
use crate::{NeuralError, Real, Tensor4};

/// Half-width of the affine output map `out = TANH_SPAN·tanh(z) + 0.5`.
/// Keeps `[0, 1]` strictly inside the attainable range so hitting 0 or 1
/// does not require saturating the tanh.
pub const TANH_SPAN: f64 = 0.6;

/// Architecture description. Hidden activations are ReLU, the final
/// activation is tanh; skips are additive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Encoder/decoder depth (number of poolings).
    pub levels: usize,
    /// Channels at the first level; doubled per level below.
    pub base_channels: usize,
    /// Conv+ReLU blocks per level (after the reducing conv on the decoder
    /// side).
    pub convs_per_level: usize,
    /// Odd kernel side, same padding.
    pub kernel_size: usize,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.levels < 1 {
            return Err(NeuralError::InvalidSpec("levels must be at least 1".into()));
        }
        if self.base_channels < 1 || self.convs_per_level < 1 {
            return Err(NeuralError::InvalidSpec(
                "base_channels and convs_per_level must be at least 1".into(),
            ));
        }
        if self.kernel_size % 2 == 0 || self.kernel_size == 0 {
            return Err(NeuralError::InvalidSpec(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }

    fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    fn enc_idx(&self, level: usize, c: usize) -> usize {
        level * self.convs_per_level + c
    }

    fn bottleneck_idx(&self, c: usize) -> usize {
        self.levels * self.convs_per_level + c
    }

    /// Decoder blocks are stored top-of-stack first (deepest level first).
    fn dec_reduce_idx(&self, level: usize) -> usize {
        let block = self.levels - 1 - level;
        (self.levels + 1) * self.convs_per_level + block * (1 + self.convs_per_level)
    }

    fn dec_conv_idx(&self, level: usize, c: usize) -> usize {
        self.dec_reduce_idx(level) + 1 + c
    }

    fn final_idx(&self) -> usize {
        (self.levels + 1) * self.convs_per_level + self.levels * (1 + self.convs_per_level)
    }

    pub fn num_layers(&self) -> usize {
        self.final_idx() + 1
    }

    /// `(name, out_channels, in_channels)` per conv, in storage order.
    pub fn layer_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut shapes = vec![(String::new(), 0usize, 0usize); self.num_layers()];
        for level in 0..self.levels {
            for c in 0..self.convs_per_level {
                let cin = if c > 0 {
                    self.channels(level)
                } else if level == 0 {
                    1
                } else {
                    self.channels(level - 1)
                };
                shapes[self.enc_idx(level, c)] =
                    (format!("enc{level}.conv{c}"), self.channels(level), cin);
            }
        }
        for c in 0..self.convs_per_level {
            let cin = if c == 0 {
                self.channels(self.levels - 1)
            } else {
                self.channels(self.levels)
            };
            shapes[self.bottleneck_idx(c)] =
                (format!("bottleneck.conv{c}"), self.channels(self.levels), cin);
        }
        for level in (0..self.levels).rev() {
            shapes[self.dec_reduce_idx(level)] = (
                format!("dec{level}.reduce"),
                self.channels(level),
                self.channels(level + 1),
            );
            for c in 0..self.convs_per_level {
                shapes[self.dec_conv_idx(level, c)] =
                    (format!("dec{level}.conv{c}"), self.channels(level), self.channels(level));
            }
        }
        shapes[self.final_idx()] = ("final".into(), 1, self.channels(0));
        shapes
    }

    /// Exact learnable parameter count.
    pub fn param_count(&self) -> usize {
        let k2 = self.kernel_size * self.kernel_size;
        self.layer_shapes()
            .iter()
            .map(|(_, cout, cin)| cout * cin * k2 + cout)
            .sum()
    }
}

/// One convolution's learnables.
#[derive(Clone, Debug)]
pub struct ConvLayer<T> {
    pub name: String,
    pub weights: Tensor4<T>,
    pub bias: Vec<T>,
}

/// The network's learnable state.
#[derive(Clone, Debug)]
pub struct NetworkParams<T> {
    pub spec: NetworkSpec,
    pub init_seed: u64,
    pub layers: Vec<ConvLayer<T>>,
}

impl<T: Real> NetworkParams<T> {
    /// Kaiming-uniform fan-in initialization (`U(±√(6/fan_in))`), zero
    /// biases, one seeded stream per layer.
    pub fn init(spec: NetworkSpec, init_seed: u64) -> Result<Self, NeuralError> {
        spec.validate()?;
        let k = spec.kernel_size;
        let layers = spec
            .layer_shapes()
            .into_iter()
            .enumerate()
            .map(|(li, (name, cout, cin))| {
                let mut rng = SeedStream::new([purpose::NET_INIT, init_seed, li as u64, 0]);
                let fan_in = (cin * k * k) as f64;
                let bound = (6.0 / fan_in).sqrt();
                let data: Vec<T> = (0..cout * cin * k * k)
                    .map(|_| T::from_f64(rng.uniform_in(-bound, bound)))
                    .collect();
                Ok(ConvLayer {
                    name,
                    weights: Tensor4::new((cout, cin, k, k), data)?,
                    bias: vec![T::zero(); cout],
                })
            })
            .collect::<Result<Vec<_>, NeuralError>>()?;
        Ok(NetworkParams {
            spec,
            init_seed,
            layers,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Converts the scalar type (used by checkpoint I/O).
    pub fn convert<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            spec: self.spec,
            init_seed: self.init_seed,
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer {
                    name: l.name.clone(),
                    weights: l.weights.map(|v| U::from_f64(v.into_f64())),
                    bias: l.bias.iter().map(|v| U::from_f64(v.into_f64())).collect(),
                })
                .collect(),
        }
    }

    fn pad(&self) -> usize {
        self.spec.kernel_size / 2
    }

    fn conv(&self, idx: usize, x: &Tensor4<T>) -> Result<Tensor4<T>, NeuralError> {
        let layer = &self.layers[idx];
        conv2d_forward(x, &layer.weights, &layer.bias, 1, self.pad()).map_err(|e| match e {
            NeuralError::ShapeMismatch { expected, got, .. } => NeuralError::ShapeMismatch {
                what: format!("layer {}", layer.name),
                expected,
                got,
            },
            other => other,
        })
    }

    /// Forward pass returning the output and the cached activations needed
    /// for the exact backward pass.
    pub fn forward_trace(&self, input: &Tensor4<T>) -> Result<(Tensor4<T>, Trace<T>), NeuralError> {
        let spec = &self.spec;
        let (_, cin, h, w) = input.dims();
        if cin != 1 {
            return Err(NeuralError::ShapeMismatch {
                what: "network input".into(),
                expected: "1 channel".into(),
                got: format!("{cin}"),
            });
        }
        let div = 1usize << spec.levels;
        if h % div != 0 || w % div != 0 {
            return Err(NeuralError::ShapeMismatch {
                what: "network input".into(),
                expected: format!("height/width divisible by {div}"),
                got: format!("{h}×{w}"),
            });
        }

        let mut cur = input.clone();
        let mut enc = Vec::with_capacity(spec.levels);
        let mut skips = Vec::with_capacity(spec.levels);
        let mut pool_args = Vec::with_capacity(spec.levels);
        let mut pool_in_dims = Vec::with_capacity(spec.levels);
        for level in 0..spec.levels {
            let mut caches = Vec::with_capacity(spec.convs_per_level);
            for c in 0..spec.convs_per_level {
                let pre = self.conv(spec.enc_idx(level, c), &cur)?;
                let out = relu_forward(&pre);
                caches.push(ConvCache { x: cur, pre });
                cur = out;
            }
            enc.push(caches);
            skips.push(cur.clone());
            pool_in_dims.push(cur.dims());
            let (pooled, arg) = maxpool2_forward(&cur);
            pool_args.push(arg);
            cur = pooled;
        }

        let mut bottleneck = Vec::with_capacity(spec.convs_per_level);
        for c in 0..spec.convs_per_level {
            let pre = self.conv(spec.bottleneck_idx(c), &cur)?;
            let out = relu_forward(&pre);
            bottleneck.push(ConvCache { x: cur, pre });
            cur = out;
        }

        let mut dec = Vec::with_capacity(spec.levels);
        for level in (0..spec.levels).rev() {
            let up = upsample2_forward(&cur);
            let pre = self.conv(spec.dec_reduce_idx(level), &up)?;
            let mut feat = relu_forward(&pre);
            let reduce = ConvCache { x: up, pre };
            // Additive skip from the matching encoder resolution.
            for (f, s) in feat.data_mut().iter_mut().zip(skips[level].data()) {
                *f += *s;
            }
            let mut convs = Vec::with_capacity(spec.convs_per_level);
            cur = feat;
            for c in 0..spec.convs_per_level {
                let pre = self.conv(spec.dec_conv_idx(level, c), &cur)?;
                let out = relu_forward(&pre);
                convs.push(ConvCache { x: cur, pre });
                cur = out;
            }
            dec.push(DecCache { level, reduce, convs });
        }

        let final_pre = self.conv(spec.final_idx(), &cur)?;
        let final_cache = ConvCache {
            x: cur,
            pre: final_pre.clone(),
        };
        // Global residual into the pre-activation, tanh, then the affine map.
        let mut z = final_pre;
        for (zv, iv) in z.data_mut().iter_mut().zip(input.data()) {
            *zv += *iv;
        }
        let t = tanh_forward(&z);
        let span = T::from_f64(TANH_SPAN);
        let half = T::from_f64(0.5);
        let out = t.map(|v| span * v + half);

        Ok((
            out,
            Trace {
                input: input.clone(),
                enc,
                pool_args,
                pool_in_dims,
                bottleneck,
                dec,
                final_conv: final_cache,
                tanh_out: t,
            },
        ))
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &Tensor4<T>) -> Result<Tensor4<T>, NeuralError> {
        self.forward_trace(input).map(|(out, _)| out)
    }

    /// Exact reverse-mode gradients of a scalar loss given `grad_out`
    /// (gradient of the loss with respect to the network output).
    pub fn backward(
        &self,
        trace: &Trace<T>,
        grad_out: &Tensor4<T>,
    ) -> Result<Gradients<T>, NeuralError> {
        let spec = &self.spec;
        let pad = self.pad();
        let mut grads: Vec<Option<(Tensor4<T>, Vec<T>)>> = vec![None; spec.num_layers()];

        // Output map out = TANH_SPAN·tanh(z) + 0.5.
        let span = T::from_f64(TANH_SPAN);
        let g_t = grad_out.map(|g| g * span);
        let g_z = tanh_backward(&trace.tanh_out, &g_t);
        // Global residual feeds the input directly.
        let mut g_input = g_z.clone();

        let final_layer = &self.layers[spec.final_idx()];
        let (mut g_cur, gw, gb) =
            conv2d_backward(&trace.final_conv.x, &final_layer.weights, &g_z, 1, pad)?;
        grads[spec.final_idx()] = Some((gw, gb));

        // Decoder blocks, shallowest level first (reverse of execution).
        let mut g_skips: Vec<Option<Tensor4<T>>> = vec![None; spec.levels];
        for block in trace.dec.iter().rev() {
            let level = block.level;
            for (c, cache) in block.convs.iter().enumerate().rev() {
                let g_pre = relu_backward(&cache.pre, &g_cur);
                let layer = &self.layers[spec.dec_conv_idx(level, c)];
                let (gx, gw, gb) = conv2d_backward(&cache.x, &layer.weights, &g_pre, 1, pad)?;
                grads[spec.dec_conv_idx(level, c)] = Some((gw, gb));
                g_cur = gx;
            }
            // The additive skip routes the same gradient to the encoder.
            g_skips[level] = Some(g_cur.clone());
            let g_pre = relu_backward(&block.reduce.pre, &g_cur);
            let layer = &self.layers[spec.dec_reduce_idx(level)];
            let (gx, gw, gb) = conv2d_backward(&block.reduce.x, &layer.weights, &g_pre, 1, pad)?;
            grads[spec.dec_reduce_idx(level)] = Some((gw, gb));
            g_cur = upsample2_backward(&gx);
        }

        for (c, cache) in trace.bottleneck.iter().enumerate().rev() {
            let g_pre = relu_backward(&cache.pre, &g_cur);
            let layer = &self.layers[spec.bottleneck_idx(c)];
            let (gx, gw, gb) = conv2d_backward(&cache.x, &layer.weights, &g_pre, 1, pad)?;
            grads[spec.bottleneck_idx(c)] = Some((gw, gb));
            g_cur = gx;
        }

        for level in (0..spec.levels).rev() {
            let mut g = maxpool2_backward(&g_cur, &trace.pool_args[level], trace.pool_in_dims[level]);
            if let Some(gs) = &g_skips[level] {
                for (a, b) in g.data_mut().iter_mut().zip(gs.data()) {
                    *a += *b;
                }
            }
            g_cur = g;
            for (c, cache) in trace.enc[level].iter().enumerate().rev() {
                let g_pre = relu_backward(&cache.pre, &g_cur);
                let layer = &self.layers[spec.enc_idx(level, c)];
                let (gx, gw, gb) = conv2d_backward(&cache.x, &layer.weights, &g_pre, 1, pad)?;
                grads[spec.enc_idx(level, c)] = Some((gw, gb));
                g_cur = gx;
            }
        }

        for (a, b) in g_input.data_mut().iter_mut().zip(g_cur.data()) {
            *a += *b;
        }

        let layers = grads
            .into_iter()
            .map(|g| g.expect("every layer visited in backward"))
            .collect();
        Ok(Gradients {
            layers,
            input: g_input,
        })
    }
}

struct ConvCache<T> {
    /// Input the conv saw.
    x: Tensor4<T>,
    /// Pre-activation output.
    pre: Tensor4<T>,
}

struct DecCache<T> {
    level: usize,
    reduce: ConvCache<T>,
    convs: Vec<ConvCache<T>>,
}

/// Cached activations of one forward pass; backward consumes it.
pub struct Trace<T> {
    input: Tensor4<T>,
    enc: Vec<Vec<ConvCache<T>>>,
    pool_args: Vec<Vec<u32>>,
    pool_in_dims: Vec<(usize, usize, usize, usize)>,
    bottleneck: Vec<ConvCache<T>>,
    dec: Vec<DecCache<T>>,
    final_conv: ConvCache<T>,
    tanh_out: Tensor4<T>,
}

impl<T: Real> Trace<T> {
    pub fn input(&self) -> &Tensor4<T> {
        &self.input
    }
}

/// Per-layer `(grad_weights, grad_bias)` in the params' storage order, plus
/// the gradient with respect to the network input.
pub struct Gradients<T> {
    pub layers: Vec<(Tensor4<T>, Vec<T>)>,
    pub input: Tensor4<T>,
}

/// Stacks images into an `(N, 1, n, n)` batch.
pub fn images_to_batch<T: Real>(images: &[&Image]) -> Result<Tensor4<T>, NeuralError> {
    if images.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let n = images[0].n();
    let mut data = Vec::with_capacity(images.len() * n * n);
    for img in images {
        if img.n() != n {
            return Err(NeuralError::ShapeMismatch {
                what: "image batch".into(),
                expected: format!("{n}×{n}"),
                got: format!("{}×{}", img.n(), img.n()),
            });
        }
        data.extend(img.values().iter().map(|&v| T::from_f64(v)));
    }
    Tensor4::new((images.len(), 1, n, n), data)
}

/// Unstacks an `(N, 1, n, n)` batch into images on `grid`.
pub fn batch_to_images<T: Real>(batch: &Tensor4<T>, grid: GridSpec) -> Result<Vec<Image>, NeuralError> {
    let (count, c, h, w) = batch.dims();
    if c != 1 || h != grid.n || w != grid.n {
        return Err(NeuralError::ShapeMismatch {
            what: "output batch".into(),
            expected: format!("(_, 1, {0}, {0})", grid.n),
            got: format!("{:?}", batch.dims()),
        });
    }
    (0..count)
        .map(|i| {
            let values = batch.plane(i, 0).iter().map(|v| v.into_f64()).collect();
            Image::new(grid, values).map_err(NeuralError::from)
        })
        .collect()
}

/// Applies the network to a batch of images, clamping the slight affine
/// overshoot back to the image range `[0, 1]`.
pub fn network_forward<T: Real>(
    params: &NetworkParams<T>,
    images: &[&Image],
) -> Result<Vec<Image>, NeuralError> {
    let grid = images
        .first()
        .ok_or(NeuralError::EmptyDataset)?
        .grid();
    let batch = images_to_batch::<T>(images)?;
    let out = params.forward(&batch)?;
    let clamped = out.map(|v| v.max(T::zero()).min(T::one()));
    batch_to_images(&clamped, grid)
}
