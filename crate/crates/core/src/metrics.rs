//! Reconstruction quality metrics for unit-range planes (peak = 1.0).

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::real::Real;

/// MSE/PSNR of a reconstruction against a reference.
///
/// `psnr_db` is `None` for a perfect match (infinite PSNR); it is never
/// reported as a fake large number.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr_db: Option<f64>,
}

impl QualityReport {
    fn from_mse(mse: f64) -> Self {
        let psnr_db = if mse == 0.0 {
            None
        } else {
            Some(10.0 * (1.0 / mse).log10())
        };
        QualityReport { mse, psnr_db }
    }
}

/// PSNR over all pixels.
pub fn psnr<R: Real>(a: &ImagePlane<R>, b: &ImagePlane<R>) -> Result<QualityReport> {
    psnr_masked(a, b, None)
}

/// PSNR over the pixels where `mask` is true (e.g. to exclude padding).
pub fn psnr_masked<R: Real>(
    a: &ImagePlane<R>,
    b: &ImagePlane<R>,
    mask: Option<&[bool]>,
) -> Result<QualityReport> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::SizeMismatch(format!(
            "cannot compare {}x{} against {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if let Some(m) = mask {
        if m.len() != a.pixel_count() {
            return Err(Error::SizeMismatch("mask length mismatch".into()));
        }
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, (x, y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
        if mask.is_none_or(|m| m[i]) {
            let d = (*x - *y).to_f64().unwrap();
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("mask excludes every pixel"));
    }
    Ok(QualityReport::from_mse(sum / count as f64))
}

/// Per-channel reports plus the aggregate over the mean MSE.
pub fn psnr_rgb<R: Real>(
    a: &[ImagePlane<R>],
    b: &[ImagePlane<R>],
) -> Result<(Vec<QualityReport>, QualityReport)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::SizeMismatch("channel count mismatch".into()));
    }
    let per: Vec<QualityReport> = a
        .iter()
        .zip(b)
        .map(|(x, y)| psnr(x, y))
        .collect::<Result<_>>()?;
    let mean_mse = per.iter().map(|r| r.mse).sum::<f64>() / per.len() as f64;
    Ok((per, QualityReport::from_mse(mean_mse)))
}
