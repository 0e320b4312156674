use rising_tomo::Image;

/// Per-pixel forward differences with replicate boundary: the difference is
/// zero on the last row/column.
#[inline]
fn diffs(values: &[f64], n: usize, r: usize, c: usize) -> (f64, f64) {
    let idx = r * n + c;
    let dh = if c + 1 < n { values[idx + 1] - values[idx] } else { 0.0 };
    let dv = if r + 1 < n { values[idx + n] - values[idx] } else { 0.0 };
    (dh, dv)
}

pub(crate) fn tv_value(values: &[f64], n: usize, beta: f64) -> f64 {
    let b2 = beta * beta;
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            let (dh, dv) = diffs(values, n, r, c);
            acc += (dh * dh + dv * dv + b2).sqrt();
        }
    }
    acc
}

/// Inverse magnitudes `w_j = 1 / √(‖∇x_j‖² + β²)`, the shared factor of the
/// gradient and of its positive split used for the SGP scaling.
fn inv_magnitudes(values: &[f64], n: usize, beta: f64) -> Vec<f64> {
    let b2 = beta * beta;
    let mut w = vec![0.0f64; n * n];
    for r in 0..n {
        for c in 0..n {
            let (dh, dv) = diffs(values, n, r, c);
            w[r * n + c] = 1.0 / (dh * dh + dv * dv + b2).sqrt();
        }
    }
    w
}

/// Analytic gradient of [`tv_value`]; accumulates into `out` (overwritten).
pub(crate) fn tv_grad(values: &[f64], n: usize, beta: f64, out: &mut [f64]) {
    let w = inv_magnitudes(values, n, beta);
    out.fill(0.0);
    for r in 0..n {
        for c in 0..n {
            let idx = r * n + c;
            let (dh, dv) = diffs(values, n, r, c);
            let wj = w[idx];
            // Summand j touches x_j and its right/down neighbors.
            if c + 1 < n {
                out[idx] -= dh * wj;
                out[idx + 1] += dh * wj;
            }
            if r + 1 < n {
                out[idx] -= dv * wj;
                out[idx + n] += dv * wj;
            }
        }
    }
}

/// Positive part `V` of the split `∇TV = V − U` with both parts nonnegative
/// on nonnegative images: `V_j = x_j · (Σ of adjacent inverse magnitudes)`.
pub(crate) fn tv_split_positive(values: &[f64], n: usize, beta: f64, out: &mut [f64]) {
    let w = inv_magnitudes(values, n, beta);
    for r in 0..n {
        for c in 0..n {
            let idx = r * n + c;
            let mut coeff = 0.0;
            if c + 1 < n {
                coeff += w[idx];
            }
            if r + 1 < n {
                coeff += w[idx];
            }
            if c > 0 {
                coeff += w[idx - 1];
            }
            if r > 0 {
                coeff += w[idx - n];
            }
            out[idx] = values[idx] * coeff;
        }
    }
}

/// Smoothed total variation `Σ_j √(‖∇x_j‖₂² + β²)` with forward differences
/// and replicate boundary.
pub fn tv_beta(x: &Image, beta: f64) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    tv_value(x.values(), x.n(), beta)
}

/// Exact analytic gradient of [`tv_beta`] under the same discretization.
pub fn tv_beta_gradient(x: &Image, beta: f64) -> Image {
    assert!(beta > 0.0, "beta must be positive");
    let n = x.n();
    let mut out = vec![0.0f64; n * n];
    tv_grad(x.values(), n, beta, &mut out);
    Image::new(x.grid(), out).expect("gradient has the image's shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rising_tomo::rng::SeedStream;
    use rising_tomo::GridSpec;

    fn random_image(n: usize, key: u64) -> Image {
        let grid = GridSpec::unit(n).unwrap();
        let mut rng = SeedStream::new([57, key, 0, 0]);
        Image::new(grid, (0..n * n).map(|_| rng.uniform()).collect()).unwrap()
    }

    #[test]
    fn constant_image_reduces_to_n_squared_beta() {
        let grid = GridSpec::unit(16).unwrap();
        let img = Image::constant(grid, 0.73).unwrap();
        assert_relative_eq!(tv_beta(&img, 1e-3), 256.0 * 1e-3, max_relative = 1e-14);
    }

    #[test]
    fn vertical_unit_step_hand_enumeration() {
        // Columns 0..2 at a, columns 2..4 at a+1: the four pixels in column 1
        // see a horizontal jump of 1; the other twelve see nothing.
        let grid = GridSpec::unit(4).unwrap();
        let beta = 1e-3;
        let mut values = vec![0.25; 16];
        for r in 0..4 {
            for c in 2..4 {
                values[r * 4 + c] = 1.25;
            }
        }
        let img = Image::new(grid, values).unwrap();
        let expected = 4.0 * (1.0f64 + beta * beta).sqrt() + 12.0 * beta;
        assert_relative_eq!(tv_beta(&img, beta), expected, max_relative = 1e-14);
    }

    #[test]
    fn lower_bound_attained_only_by_constants() {
        let beta = 1e-3;
        for key in 0..4 {
            let img = random_image(8, key);
            assert!(tv_beta(&img, beta) > 64.0 * beta);
        }
        let flat = Image::constant(GridSpec::unit(8).unwrap(), 0.1).unwrap();
        assert_relative_eq!(tv_beta(&flat, beta), 64.0 * beta, max_relative = 1e-14);
    }

    #[test]
    fn gradient_of_constant_image_is_zero() {
        let grid = GridSpec::unit(12).unwrap();
        let img = Image::constant(grid, 0.4).unwrap();
        let g = tv_beta_gradient(&img, 1e-3);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let beta = 1e-3;
        let img = random_image(12, 5);
        let g = tv_beta_gradient(&img, beta);
        let h = 1e-6;
        let mut max_err = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..img.values().len() {
            let mut plus = img.clone();
            plus.values_mut()[idx] += h;
            let mut minus = img.clone();
            minus.values_mut()[idx] -= h;
            let fd = (tv_beta(&plus, beta) - tv_beta(&minus, beta)) / (2.0 * h);
            max_err = max_err.max((g.values()[idx] - fd).abs());
            scale = scale.max(fd.abs());
        }
        assert!(max_err / scale <= 1e-5, "relative error {}", max_err / scale);
    }

    #[test]
    fn gradient_is_translation_equivariant_in_the_interior() {
        // A bump shifted by one pixel shifts its gradient by one pixel.
        let n = 16;
        let grid = GridSpec::unit(n).unwrap();
        let bump = |r0: usize, c0: usize| {
            let mut v = vec![0.0f64; n * n];
            for dr in 0..3 {
                for dc in 0..3 {
                    v[(r0 + dr) * n + (c0 + dc)] = 0.8 - 0.1 * (dr + dc) as f64;
                }
            }
            Image::new(grid, v).unwrap()
        };
        let g_a = tv_beta_gradient(&bump(5, 5), 1e-3);
        let g_b = tv_beta_gradient(&bump(5, 6), 1e-3);
        for r in 2..(n - 3) {
            for c in 2..(n - 4) {
                assert_relative_eq!(g_a.at(r, c), g_b.at(r, c + 1), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn positive_split_dominates_gradient_on_nonnegative_images() {
        // V ≥ 0 and V − ∇TV ≥ 0 elementwise, which is what the scaled
        // iteration needs from the split.
        let img = random_image(10, 9);
        let n = img.n();
        let mut v = vec![0.0; n * n];
        tv_split_positive(img.values(), n, 1e-3, &mut v);
        let g = tv_beta_gradient(&img, 1e-3);
        for (vj, gj) in v.iter().zip(g.values()) {
            assert!(*vj >= 0.0);
            assert!(vj - gj >= -1e-12, "U = V - g must stay nonnegative");
        }
    }
}
