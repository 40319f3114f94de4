//! Randomized round-trip and algebraic properties.

use proptest::prelude::*;

use slci::hadamard::{fwht, CalibrationTag, HadamardOperator, MeasurementMeta, MeasurementVector};
use slci::image::ImagePlane;
use slci::measfile::{decode_measurements, encode_measurements};
use slci::metrics::psnr;
use slci::pnm::{decode_image, encode_image};
use slci::rng::Rng;
use slci::shrinkage::{select_lambda, soft_threshold};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fwht_is_an_involution_up_to_order(
        log_n in 1u32..9,
        seed in any::<u64>(),
    ) {
        let n = 1usize << log_n;
        let mut rng = Rng::new(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let twice = fwht(&fwht(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&twice) {
            prop_assert!((a * n as f64 - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pnm_round_trip_is_byte_identical(
        w in 1usize..12,
        h in 1usize..12,
        sixteen_bit in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let maxval = if sixteen_bit { 65535 } else { 255 };
        let mut rng = Rng::new(seed);
        let plane = ImagePlane::<f64>::from_fn(w, h, |_, _| {
            (rng.next_u64() % (maxval as u64 + 1)) as f64 / maxval as f64
        });
        let bytes = encode_image(&[plane], maxval).unwrap();
        let raster = decode_image::<f64>(&bytes).unwrap();
        let again = encode_image(&raster.planes, raster.maxval).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn measurement_file_round_trip(
        m in 1u32..64,
        channels in 1usize..4,
        seed in any::<u64>(),
        physical in any::<bool>(),
    ) {
        let calibration = if physical {
            CalibrationTag::Physical { g: 0.9, f: 0.05 }
        } else {
            CalibrationTag::Ideal
        };
        let meta = MeasurementMeta {
            n_x: 8,
            n_y: 8,
            m,
            permutation_seed: seed,
            row_seed: seed ^ 1,
            calibration,
        };
        let mut rng = Rng::new(seed);
        let chans: Vec<MeasurementVector<f64>> = (0..channels)
            .map(|_| MeasurementVector {
                values: (0..m).map(|_| rng.next_f64() - 0.5).collect(),
                meta: meta.clone(),
            })
            .collect();
        let bytes = encode_measurements(&chans).unwrap();
        let back: Vec<MeasurementVector<f64>> = decode_measurements(&bytes).unwrap();
        prop_assert_eq!(back, chans);
    }

    #[test]
    fn psnr_is_symmetric(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let a = ImagePlane::<f64>::from_fn(6, 5, |_, _| rng.next_f64());
        let b = ImagePlane::<f64>::from_fn(6, 5, |_, _| rng.next_f64());
        let ab = psnr(&a, &b).unwrap();
        let ba = psnr(&b, &a).unwrap();
        prop_assert_eq!(ab.mse.to_bits(), ba.mse.to_bits());
    }

    #[test]
    fn soft_threshold_never_grows_coefficients(
        seed in any::<u64>(),
        n in 2usize..40,
    ) {
        let mut rng = Rng::new(seed);
        let coeffs: Vec<f64> = (0..n).map(|_| 4.0 * (rng.next_f64() - 0.5)).collect();
        let m_star = 1 + (rng.next_u64() as usize) % (n - 1);
        let lambda = select_lambda(&coeffs, m_star).unwrap();
        let beta = soft_threshold(&coeffs, lambda).unwrap();
        for (b, c) in beta.iter().zip(&coeffs) {
            prop_assert!(b.abs() <= c.abs());
            prop_assert!(b.signum() == c.signum() || *b == 0.0);
        }
        prop_assert!(beta.iter().filter(|&&v| v != 0.0).count() <= m_star);
    }

    #[test]
    fn operator_rows_are_orthonormal(
        seed in any::<u64>(),
        csr_pct in 5u32..100,
    ) {
        let op = HadamardOperator::<f64>::build(8, 8, csr_pct as f64 / 100.0, seed).unwrap();
        let mut rng = Rng::new(seed ^ 0xABCD);
        let y: Vec<f64> = (0..op.measurement_count())
            .map(|_| rng.next_f64() - 0.5)
            .collect();
        let back = op.forward(&op.adjoint(&y).unwrap()).unwrap();
        for (a, b) in y.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
