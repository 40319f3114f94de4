use crate::error::{Error, Result};
use crate::real::Real;

/// A single channel of pixel intensities, row-major.
///
/// Acquisition expects unit-range values; solver iterates may wander outside
/// [0, 1] and are only required to stay finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane<R: Real> {
    width: usize,
    height: usize,
    values: Vec<R>,
}

impl<R: Real> ImagePlane<R> {
    pub fn new(width: usize, height: usize, values: Vec<R>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if values.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "expected {} pixel values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(ImagePlane { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        ImagePlane {
            width,
            height,
            values: vec![R::zero(); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        ImagePlane { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, x: usize, y: usize) -> R {
        self.values[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [R] {
        &mut self.values
    }

    /// Flatten into a zero-padded vector of length `order` (pad pixels after
    /// the image data are zero).
    pub fn to_padded(&self, order: usize) -> Result<Vec<R>> {
        if order < self.values.len() {
            return Err(Error::SizeMismatch(format!(
                "order {} smaller than pixel count {}",
                order,
                self.values.len()
            )));
        }
        let mut v = self.values.clone();
        v.resize(order, R::zero());
        Ok(v)
    }

    /// Inverse of [`to_padded`]: keep the first `width*height` entries.
    pub fn from_padded(padded: &[R], width: usize, height: usize) -> Result<Self> {
        if padded.len() < width * height {
            return Err(Error::SizeMismatch(format!(
                "padded vector of length {} shorter than {} pixels",
                padded.len(),
                width * height
            )));
        }
        ImagePlane::new(width, height, padded[..width * height].to_vec())
    }
}
