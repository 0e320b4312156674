use proptest::prelude::*;
use rising_metrics::{rmse, ssim};
use rising_tomo::rng::SeedStream;
use rising_tomo::{GridSpec, Image};

fn keyed_image(n: usize, key: u64) -> Image {
    let grid = GridSpec::unit(n).unwrap();
    let mut rng = SeedStream::new([41, key, 0, 0]);
    Image::new(grid, (0..n * n).map(|_| rng.uniform()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rmse_triangle_bound(n in 4usize..24, key in 0u64..10_000) {
        let x = keyed_image(n, key);
        let y = keyed_image(n, key.wrapping_add(1));
        let z = keyed_image(n, key.wrapping_add(2));
        let xz = rmse(&x, &z).unwrap();
        let via = rmse(&x, &y).unwrap() + rmse(&y, &z).unwrap();
        prop_assert!(xz <= via + 1e-12);
    }

    #[test]
    fn ssim_bounded_above_by_one(n in 12usize..28, key in 0u64..10_000) {
        let x = keyed_image(n, key);
        let y = keyed_image(n, key.wrapping_add(5));
        prop_assert!(ssim(&x, &y).unwrap() <= 1.0 + 1e-12);
        prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() <= 1e-12);
    }
}
