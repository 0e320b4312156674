//! Layer primitives and their exact reverse-mode gradients.
//!
//! Convolution is cross-correlation (no kernel flip). Inner loops are
//! written as contiguous slice updates so the stride-1 path vectorizes.

use rayon::prelude::*;

use crate::{NeuralError, Real, Tensor4};

fn conv_out_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// Cross-correlation of `x: (N, Cin, H, W)` with `w: (Cout, Cin, K, K)` plus
/// per-output-channel bias; zero padding `pad`, stride `stride`.
pub fn conv2d_forward<T: Real>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    bias: &[T],
    stride: usize,
    pad: usize,
) -> Result<Tensor4<T>, NeuralError> {
    let (n, cin, h, wd) = x.dims();
    let (cout, wcin, kh, kw) = w.dims();
    if wcin != cin || bias.len() != cout {
        return Err(NeuralError::ShapeMismatch {
            what: "conv2d".into(),
            expected: format!("weights (_, {cin}, _, _) and {cout} biases"),
            got: format!("weights {:?}, {} biases", w.dims(), bias.len()),
        });
    }
    if stride == 0 || h + 2 * pad < kh || wd + 2 * pad < kw {
        return Err(NeuralError::ShapeMismatch {
            what: "conv2d".into(),
            expected: "kernel no larger than padded input, stride >= 1".into(),
            got: format!("input {h}×{wd}, kernel {kh}×{kw}, stride {stride}, pad {pad}"),
        });
    }
    let ho = conv_out_extent(h, kh, stride, pad);
    let wo = conv_out_extent(wd, kw, stride, pad);

    let mut out = Tensor4::zeros((n, cout, ho, wo));
    // Each (batch, out-channel) plane is independent.
    let planes: Vec<(usize, usize)> = (0..n)
        .flat_map(|bi| (0..cout).map(move |co| (bi, co)))
        .collect();
    let results: Vec<Vec<T>> = planes
        .par_iter()
        .map(|&(bi, co)| {
            let mut plane = vec![bias[co]; ho * wo];
            for ci in 0..cin {
                let xp = x.plane(bi, ci);
                for ki in 0..kh {
                    for kj in 0..kw {
                        let wv = w.plane(co, ci)[ki * kw + kj];
                        if stride == 1 {
                            // wi = oy·1 + ki − pad, wj = ox + kj − pad
                            for oy in 0..ho {
                                let iy = oy as isize + ki as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let shift = kj as isize - pad as isize;
                                let ox_lo = (-shift).max(0) as usize;
                                let ox_hi = wo.min((wd as isize - shift).max(0) as usize);
                                if ox_lo >= ox_hi {
                                    continue;
                                }
                                let xrow = &xp[iy as usize * wd..][..wd];
                                let orow = &mut plane[oy * wo..][..wo];
                                let xs = &xrow[(ox_lo as isize + shift) as usize
                                    ..(ox_hi as isize + shift) as usize];
                                for (o, xv) in orow[ox_lo..ox_hi].iter_mut().zip(xs) {
                                    *o += wv * *xv;
                                }
                            }
                        } else {
                            for oy in 0..ho {
                                let iy = (oy * stride) as isize + ki as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for ox in 0..wo {
                                    let ix = (ox * stride) as isize + kj as isize - pad as isize;
                                    if ix < 0 || ix >= wd as isize {
                                        continue;
                                    }
                                    plane[oy * wo + ox] +=
                                        wv * xp[iy as usize * wd + ix as usize];
                                }
                            }
                        }
                    }
                }
            }
            plane
        })
        .collect();
    for (&(bi, co), plane) in planes.iter().zip(results) {
        out.plane_mut(bi, co).copy_from_slice(&plane);
    }
    Ok(out)
}

/// Gradients of [`conv2d_forward`] given the output gradient: returns
/// `(grad_x, grad_w, grad_bias)`.
pub fn conv2d_backward<T: Real>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>), NeuralError> {
    let (n, cin, h, wd) = x.dims();
    let (cout, _, kh, kw) = w.dims();
    let (gn, gcout, ho, wo) = grad_out.dims();
    if gn != n || gcout != cout {
        return Err(NeuralError::ShapeMismatch {
            what: "conv2d backward".into(),
            expected: format!("grad for {n} samples × {cout} channels"),
            got: format!("{:?}", grad_out.dims()),
        });
    }

    // grad_x: each batch sample independent.
    let gx_planes: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|bi| {
            let mut gx = vec![T::zero(); cin * h * wd];
            for co in 0..cout {
                let gp = grad_out.plane(bi, co);
                for ci in 0..cin {
                    let gxp = &mut gx[ci * h * wd..][..h * wd];
                    for ki in 0..kh {
                        for kj in 0..kw {
                            let wv = w.plane(co, ci)[ki * kw + kj];
                            for oy in 0..ho {
                                let iy = (oy * stride) as isize + ki as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                if stride == 1 {
                                    let shift = kj as isize - pad as isize;
                                    let ox_lo = (-shift).max(0) as usize;
                                    let ox_hi = wo.min((wd as isize - shift).max(0) as usize);
                                    if ox_lo >= ox_hi {
                                        continue;
                                    }
                                    let grow = &gp[oy * wo..][..wo];
                                    let gxrow = &mut gxp[iy as usize * wd..][..wd];
                                    let dst = &mut gxrow[(ox_lo as isize + shift) as usize
                                        ..(ox_hi as isize + shift) as usize];
                                    for (d, g) in dst.iter_mut().zip(&grow[ox_lo..ox_hi]) {
                                        *d += wv * *g;
                                    }
                                } else {
                                    for ox in 0..wo {
                                        let ix =
                                            (ox * stride) as isize + kj as isize - pad as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        gxp[iy as usize * wd + ix as usize] +=
                                            wv * gp[oy * wo + ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            gx
        })
        .collect();
    let mut grad_x = Tensor4::zeros((n, cin, h, wd));
    for (bi, gx) in gx_planes.into_iter().enumerate() {
        let dst = &mut grad_x.data_mut()[bi * cin * h * wd..][..cin * h * wd];
        dst.copy_from_slice(&gx);
    }

    // grad_w and grad_bias: each output channel independent.
    let per_co: Vec<(Vec<T>, T)> = (0..cout)
        .into_par_iter()
        .map(|co| {
            let mut gw = vec![T::zero(); cin * kh * kw];
            let mut gb = T::zero();
            for bi in 0..n {
                let gp = grad_out.plane(bi, co);
                for g in gp {
                    gb += *g;
                }
                for ci in 0..cin {
                    let xp = x.plane(bi, ci);
                    for ki in 0..kh {
                        for kj in 0..kw {
                            let mut acc = T::zero();
                            for oy in 0..ho {
                                let iy = (oy * stride) as isize + ki as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                if stride == 1 {
                                    let shift = kj as isize - pad as isize;
                                    let ox_lo = (-shift).max(0) as usize;
                                    let ox_hi = wo.min((wd as isize - shift).max(0) as usize);
                                    if ox_lo >= ox_hi {
                                        continue;
                                    }
                                    let grow = &gp[oy * wo..][..wo];
                                    let xrow = &xp[iy as usize * wd..][..wd];
                                    let xs = &xrow[(ox_lo as isize + shift) as usize
                                        ..(ox_hi as isize + shift) as usize];
                                    for (g, xv) in grow[ox_lo..ox_hi].iter().zip(xs) {
                                        acc += *g * *xv;
                                    }
                                } else {
                                    for ox in 0..wo {
                                        let ix =
                                            (ox * stride) as isize + kj as isize - pad as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        acc += gp[oy * wo + ox]
                                            * xp[iy as usize * wd + ix as usize];
                                    }
                                }
                            }
                            gw[(ci * kh + ki) * kw + kj] += acc;
                        }
                    }
                }
            }
            (gw, gb)
        })
        .collect();
    let mut grad_w = Tensor4::zeros((cout, cin, kh, kw));
    let mut grad_b = vec![T::zero(); cout];
    for (co, (gw, gb)) in per_co.into_iter().enumerate() {
        grad_w.data_mut()[co * cin * kh * kw..][..cin * kh * kw].copy_from_slice(&gw);
        grad_b[co] = gb;
    }
    Ok((grad_x, grad_w, grad_b))
}

pub fn relu_forward<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    y
}

/// Gradient through ReLU given the pre-activation input; zero where the
/// input was non-positive.
pub fn relu_backward<T: Real>(pre: &Tensor4<T>, grad_out: &Tensor4<T>) -> Tensor4<T> {
    let mut gx = grad_out.clone();
    for (g, p) in gx.data_mut().iter_mut().zip(pre.data()) {
        if *p <= T::zero() {
            *g = T::zero();
        }
    }
    gx
}

pub fn tanh_forward<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| v.tanh())
}

/// Gradient through tanh given the tanh *output*.
pub fn tanh_backward<T: Real>(out: &Tensor4<T>, grad_out: &Tensor4<T>) -> Tensor4<T> {
    let mut gx = grad_out.clone();
    for (g, y) in gx.data_mut().iter_mut().zip(out.data()) {
        *g *= T::one() - *y * *y;
    }
    gx
}

/// 2×2 max pooling with stride 2. Returns the pooled tensor and the flat
/// argmax index (into the input tensor) per output element; ties go to the
/// first maximum in scan order.
pub fn maxpool2_forward<T: Real>(x: &Tensor4<T>) -> (Tensor4<T>, Vec<u32>) {
    let (n, c, h, w) = x.dims();
    let (ho, wo) = (h / 2, w / 2);
    let mut y = Tensor4::zeros((n, c, ho, wo));
    let mut arg = vec![0u32; n * c * ho * wo];
    let mut out_idx = 0usize;
    for bi in 0..n {
        for ci in 0..c {
            let xp = x.plane(bi, ci);
            let base = (bi * c + ci) * h * w;
            let yp = y.plane_mut(bi, ci);
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = xp[(2 * oy) * w + 2 * ox];
                    let mut best_at = (2 * oy) * w + 2 * ox;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let at = (2 * oy + dy) * w + 2 * ox + dx;
                            if xp[at] > best {
                                best = xp[at];
                                best_at = at;
                            }
                        }
                    }
                    yp[oy * wo + ox] = best;
                    arg[out_idx] = (base + best_at) as u32;
                    out_idx += 1;
                }
            }
        }
    }
    (y, arg)
}

/// Scatters the output gradient back to the argmax positions.
pub fn maxpool2_backward<T: Real>(
    grad_out: &Tensor4<T>,
    argmax: &[u32],
    input_dims: (usize, usize, usize, usize),
) -> Tensor4<T> {
    let mut gx = Tensor4::zeros(input_dims);
    let data = gx.data_mut();
    for (g, &at) in grad_out.data().iter().zip(argmax) {
        data[at as usize] += *g;
    }
    gx
}

/// Nearest-neighbor 2× upsampling.
pub fn upsample2_forward<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    let (n, c, h, w) = x.dims();
    let mut y = Tensor4::zeros((n, c, 2 * h, 2 * w));
    for bi in 0..n {
        for ci in 0..c {
            let xp = x.plane(bi, ci);
            let yp = y.plane_mut(bi, ci);
            for iy in 0..h {
                for ix in 0..w {
                    let v = xp[iy * w + ix];
                    let row0 = 2 * iy * 2 * w + 2 * ix;
                    let row1 = (2 * iy + 1) * 2 * w + 2 * ix;
                    yp[row0] = v;
                    yp[row0 + 1] = v;
                    yp[row1] = v;
                    yp[row1 + 1] = v;
                }
            }
        }
    }
    y
}

/// Adjoint of nearest-neighbor upsampling: each input cell collects its
/// 2×2 replica gradients.
pub fn upsample2_backward<T: Real>(grad_out: &Tensor4<T>) -> Tensor4<T> {
    let (n, c, h2, w2) = grad_out.dims();
    let (h, w) = (h2 / 2, w2 / 2);
    let mut gx = Tensor4::zeros((n, c, h, w));
    for bi in 0..n {
        for ci in 0..c {
            let gp = grad_out.plane(bi, ci);
            let gxp = gx.plane_mut(bi, ci);
            for iy in 0..h {
                for ix in 0..w {
                    let row0 = 2 * iy * w2 + 2 * ix;
                    let row1 = (2 * iy + 1) * w2 + 2 * ix;
                    gxp[iy * w + ix] = gp[row0] + gp[row0 + 1] + gp[row1] + gp[row1 + 1];
                }
            }
        }
    }
    gx
}

/// Mean squared error over all elements; returns the loss and its gradient
/// with respect to the prediction.
pub fn mse_loss<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(T, Tensor4<T>), NeuralError> {
    if pred.dims() != target.dims() {
        return Err(NeuralError::ShapeMismatch {
            what: "mse".into(),
            expected: format!("{:?}", pred.dims()),
            got: format!("{:?}", target.dims()),
        });
    }
    let numel = T::from_f64(pred.len() as f64);
    let mut loss = T::zero();
    let mut grad = pred.clone();
    for (g, t) in grad.data_mut().iter_mut().zip(target.data()) {
        let d = *g - *t;
        loss += d * d;
        *g = (T::one() + T::one()) * d / numel;
    }
    Ok((loss / numel, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_from(dims: (usize, usize, usize, usize), values: &[f64]) -> Tensor4<f64> {
        Tensor4::new(dims, values.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let x = tensor_from((1, 1, 3, 3), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let w = tensor_from((1, 1, 1, 1), &[1.0]);
        let y = conv2d_forward(&x, &w, &[0.0], 1, 0).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn ones_kernel_on_one_hot_spreads_a_block() {
        let mut xv = vec![0.0; 25];
        xv[12] = 1.0; // center of a 5×5
        let x = tensor_from((1, 1, 5, 5), &xv);
        let w = tensor_from((1, 1, 3, 3), &[1.0; 9]);
        let y = conv2d_forward(&x, &w, &[0.0], 1, 1).unwrap();
        for oy in 0..5 {
            for ox in 0..5 {
                let expected = if (1..=3).contains(&oy) && (1..=3).contains(&ox) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(y.data()[oy * 5 + ox], expected, "at ({oy},{ox})");
            }
        }
        // Border one-hot gets clipped.
        let mut xv = vec![0.0; 25];
        xv[0] = 1.0;
        let x = tensor_from((1, 1, 5, 5), &xv);
        let y = conv2d_forward(&x, &w, &[0.0], 1, 1).unwrap();
        let hits: f64 = y.data().iter().sum();
        assert_eq!(hits, 4.0);
    }

    #[test]
    fn conv_is_linear_in_the_input() {
        let mk = |key: u64, len: usize| -> Vec<f64> {
            let mut rng = rising_tomo::rng::SeedStream::new([71, key, 0, 0]);
            (0..len).map(|_| rng.uniform() - 0.5).collect()
        };
        let x1 = tensor_from((1, 2, 6, 6), &mk(1, 72));
        let x2 = tensor_from((1, 2, 6, 6), &mk(2, 72));
        let w = tensor_from((3, 2, 3, 3), &mk(3, 54));
        let b = vec![0.0; 3];
        let sum = Tensor4::new(
            x1.dims(),
            x1.data().iter().zip(x2.data()).map(|(a, c)| a + c).collect(),
        )
        .unwrap();
        let y_sum = conv2d_forward(&sum, &w, &b, 1, 1).unwrap();
        let y1 = conv2d_forward(&x1, &w, &b, 1, 1).unwrap();
        let y2 = conv2d_forward(&x2, &w, &b, 1, 1).unwrap();
        for i in 0..y_sum.len() {
            assert!((y_sum.data()[i] - (y1.data()[i] + y2.data()[i])).abs() <= 1e-6);
        }
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        let mk = |key: u64, len: usize| -> Vec<f64> {
            let mut rng = rising_tomo::rng::SeedStream::new([73, key, 0, 0]);
            (0..len).map(|_| rng.uniform() - 0.5).collect()
        };
        let x = tensor_from((2, 2, 5, 5), &mk(1, 100));
        let w = tensor_from((3, 2, 3, 3), &mk(2, 54));
        let b: Vec<f64> = mk(3, 3);
        // Scalar objective: weighted sum of outputs (fixed weights).
        let y = conv2d_forward(&x, &w, &b, 1, 1).unwrap();
        let probe = tensor_from(y.dims(), &mk(4, y.len()));
        let scalar = |y: &Tensor4<f64>| -> f64 {
            y.data().iter().zip(probe.data()).map(|(a, p)| a * p).sum()
        };
        let (gx, gw, gb) = conv2d_backward(&x, &w, &probe, 1, 1).unwrap();

        // Central finite differences over a sample of coordinates.
        let h = 1e-6;
        let mut max_err = 0.0f64;
        for idx in [0usize, 7, 31, 99] {
            let mut xp = x.clone();
            xp.data_mut()[idx] += h;
            let mut xm = x.clone();
            xm.data_mut()[idx] -= h;
            let fd = (scalar(&conv2d_forward(&xp, &w, &b, 1, 1).unwrap())
                - scalar(&conv2d_forward(&xm, &w, &b, 1, 1).unwrap()))
                / (2.0 * h);
            max_err = max_err.max((fd - gx.data()[idx]).abs());
        }
        for idx in [0usize, 10, 53] {
            let mut wp = w.clone();
            wp.data_mut()[idx] += h;
            let mut wm = w.clone();
            wm.data_mut()[idx] -= h;
            let fd = (scalar(&conv2d_forward(&x, &wp, &b, 1, 1).unwrap())
                - scalar(&conv2d_forward(&x, &wm, &b, 1, 1).unwrap()))
                / (2.0 * h);
            max_err = max_err.max((fd - gw.data()[idx]).abs());
        }
        for idx in 0..3 {
            let mut bp = b.clone();
            bp[idx] += h;
            let mut bm = b.clone();
            bm[idx] -= h;
            let fd = (scalar(&conv2d_forward(&x, &w, &bp, 1, 1).unwrap())
                - scalar(&conv2d_forward(&x, &w, &bm, 1, 1).unwrap()))
                / (2.0 * h);
            max_err = max_err.max((fd - gb[idx]).abs());
        }
        assert!(max_err <= 1e-8, "max abs error {max_err}");
    }

    #[test]
    fn relu_gradient_is_zero_on_flat_region() {
        let pre = tensor_from((1, 1, 2, 2), &[-1.0, -0.5, 0.0, 2.0]);
        let gy = tensor_from((1, 1, 2, 2), &[1.0, 1.0, 1.0, 1.0]);
        let gx = relu_backward(&pre, &gy);
        assert_eq!(gx.data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn maxpool_selects_maximum_and_routes_gradient() {
        let x = tensor_from((1, 1, 4, 4), &[
            1.0, 2.0, 0.0, 0.0, //
            3.0, 0.5, 0.0, 4.0, //
            9.0, 8.0, 7.0, 6.0, //
            0.0, 1.0, 2.0, 3.0,
        ]);
        let (y, arg) = maxpool2_forward(&x);
        assert_eq!(y.data(), &[3.0, 4.0, 9.0, 7.0]);
        let gy = tensor_from((1, 1, 2, 2), &[1.0, 2.0, 3.0, 4.0]);
        let gx = maxpool2_backward(&gy, &arg, x.dims());
        assert_eq!(gx.data()[4], 1.0); // 3.0 at flat index 4
        assert_eq!(gx.data()[7], 2.0); // 4.0 at flat index 7
        assert_eq!(gx.data()[8], 3.0); // 9.0 at flat index 8
        assert_eq!(gx.data()[10], 4.0); // 7.0 at flat index 10
        assert_eq!(gx.data().iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn upsample_backward_is_adjoint_of_forward() {
        let mut rng = rising_tomo::rng::SeedStream::new([79, 0, 0, 0]);
        let x = tensor_from((1, 2, 3, 3), &(0..18).map(|_| rng.uniform()).collect::<Vec<_>>());
        let gy = tensor_from((1, 2, 6, 6), &(0..72).map(|_| rng.uniform()).collect::<Vec<_>>());
        let y = upsample2_forward(&x);
        let gx = upsample2_backward(&gy);
        let lhs: f64 = y.data().iter().zip(gy.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(gx.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn mse_of_identical_tensors_is_zero() {
        let x = tensor_from((1, 1, 2, 2), &[0.1, 0.2, 0.3, 0.4]);
        let (loss, grad) = mse_loss(&x, &x).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }
}
