//! Camera simulation: ideal orthonormal-basis measurements, raw physical
//! readings under the {0,1}-transmittance aperture model, and the
//! calibration that maps one to the other.
//!
//! The aperture can only realize transmittances in [0, 1], so the hardware
//! programs the {0,1} pattern A+ = (A0 + 1)/2 of the +/-1 Hadamard row A0.
//! An element programmed to 1 transmits a fraction `g`, an element
//! programmed to 0 still leaks a fraction `f`. Row 0 (all elements open) is
//! mandatory in every physical acquisition: its reading g * sum(x) supplies
//! the image sum needed to undo the {0,1} -> +/-1 conversion.

use crate::error::{Error, Result};
use crate::hadamard::{CalibrationTag, HadamardOperator, MeasurementMeta, MeasurementVector};
use crate::image::ImagePlane;
use crate::real::{rf, Real};
use crate::rng::{splitmix64, Rng};

/// Physical transmittances of the two aperture states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationModel {
    g: f64,
    f: f64,
}

impl CalibrationModel {
    pub fn new(g: f64, f: f64) -> Result<Self> {
        if !(0.0 <= f && f < g && g <= 1.0) {
            return Err(Error::invalid(format!(
                "calibration requires 0 <= f < g <= 1, got g={g}, f={f}"
            )));
        }
        Ok(CalibrationModel { g, f })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    /// Leakage-free unit-gain aperture.
    pub fn ideal() -> Self {
        CalibrationModel { g: 1.0, f: 0.0 }
    }
}

fn check_dims<R: Real>(op: &HadamardOperator<R>, x: &ImagePlane<R>) -> Result<()> {
    let (n_x, n_y) = op.image_dims();
    if (x.width(), x.height()) != (n_x, n_y) {
        return Err(Error::SizeMismatch(format!(
            "operator built for {n_x}x{n_y}, image is {}x{}",
            x.width(),
            x.height()
        )));
    }
    Ok(())
}

/// y = A x + n with n ~ N(0, sigma^2) from a seeded generator.
pub fn sense_ideal<R: Real>(
    op: &HadamardOperator<R>,
    x: &ImagePlane<R>,
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<MeasurementVector<R>> {
    if noise_sigma < 0.0 {
        return Err(Error::invalid("noise sigma must be non-negative"));
    }
    check_dims(op, x)?;
    let mut values = op.forward(&x.to_padded(op.order())?)?;
    if noise_sigma > 0.0 {
        let mut rng = Rng::new(noise_seed);
        for v in &mut values {
            *v += rf::<R>(noise_sigma * rng.gaussian());
        }
    }
    Ok(MeasurementVector {
        values,
        meta: MeasurementMeta::for_operator(op, CalibrationTag::Ideal),
    })
}

/// Raw sensor readings: z_m = (g - f) * (A+ row m) . x + f * sum(x).
///
/// Unnormalized photon counts in arbitrary units; no 1/sqrt(N) scale.
pub fn sense_physical<R: Real>(
    op: &HadamardOperator<R>,
    x: &ImagePlane<R>,
    cal: &CalibrationModel,
) -> Result<MeasurementVector<R>> {
    check_dims(op, x)?;
    if !op.selected_rows().contains(&0) {
        return Err(Error::invalid(
            "physical sensing requires the all-ones row 0 for calibration",
        ));
    }
    let padded = x.to_padded(op.order())?;
    let sum: R = padded.iter().copied().sum();
    // A+ x = (A0 x + sum(x)) / 2, with A0 x from the unnormalized fast path.
    let a0x = op.apply_unnormalized(&padded)?;
    let g = rf::<R>(cal.g());
    let f = rf::<R>(cal.f());
    let half = rf::<R>(0.5);
    let values = a0x
        .iter()
        .map(|&u| (g - f) * half * (u + sum) + f * sum)
        .collect();
    Ok(MeasurementVector {
        values,
        meta: MeasurementMeta::for_operator(
            op,
            CalibrationTag::Physical {
                g: cal.g(),
                f: cal.f(),
            },
        ),
    })
}

/// Convert raw physical readings back to ideal orthonormal measurements:
/// sum(x) = z_0 / g, A+ x = (z_m - f sum) / (g - f), A0 x = 2 A+ x - sum,
/// y_m = A0 x / sqrt(N).
pub fn calibrate<R: Real>(
    z: &MeasurementVector<R>,
    cal: &CalibrationModel,
    op: &HadamardOperator<R>,
) -> Result<MeasurementVector<R>> {
    if cal.g() == cal.f() {
        return Err(Error::DegenerateCalibration);
    }
    if z.values.len() != op.measurement_count() {
        return Err(Error::SizeMismatch(format!(
            "expected {} measurements, got {}",
            op.measurement_count(),
            z.values.len()
        )));
    }
    let row0 = op
        .selected_rows()
        .iter()
        .position(|&r| r == 0)
        .ok_or_else(|| Error::invalid("calibration requires the all-ones row 0"))?;
    let g = rf::<R>(cal.g());
    let f = rf::<R>(cal.f());
    let two = rf::<R>(2.0);
    let sum = z.values[row0] / g;
    let values = z
        .values
        .iter()
        .map(|&zm| {
            let a_plus = (zm - f * sum) / (g - f);
            (two * a_plus - sum) * op.scale()
        })
        .collect();
    Ok(MeasurementVector {
        values,
        meta: MeasurementMeta {
            calibration: CalibrationTag::Ideal,
            ..z.meta.clone()
        },
    })
}

/// Per-channel ideal acquisition with the same operator. Channel noise seeds
/// are derived from `noise_seed` via SplitMix64 so each channel matches an
/// independent [`sense_ideal`] call with the derived seed.
pub fn sense_rgb_ideal<R: Real>(
    op: &HadamardOperator<R>,
    channels: &[ImagePlane<R>; 3],
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<[MeasurementVector<R>; 3]> {
    let dims = (channels[0].width(), channels[0].height());
    if channels.iter().any(|c| (c.width(), c.height()) != dims) {
        return Err(Error::invalid("RGB planes must share dimensions"));
    }
    let seeds = channel_seeds(noise_seed);
    Ok([
        sense_ideal(op, &channels[0], noise_sigma, seeds[0])?,
        sense_ideal(op, &channels[1], noise_sigma, seeds[1])?,
        sense_ideal(op, &channels[2], noise_sigma, seeds[2])?,
    ])
}

/// The per-channel noise seeds used by [`sense_rgb_ideal`].
pub fn channel_seeds(noise_seed: u64) -> [u64; 3] {
    let mut sm = noise_seed;
    [
        splitmix64(&mut sm),
        splitmix64(&mut sm),
        splitmix64(&mut sm),
    ]
}
