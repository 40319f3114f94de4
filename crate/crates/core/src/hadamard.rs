//! Sensing matrix as a fast implicit operator: rows of a Sylvester Hadamard
//! matrix, columns permuted by a single predetermined seeded permutation,
//! scaled by 1/sqrt(N) so that A A^T = I holds exactly.
//!
//! Whether the hardware permutes per row or globally is not pinned down
//! anywhere; a single global column permutation is used here and recorded in
//! the measurement metadata for reproducibility.

use crate::error::{Error, Result};
use crate::real::{rf, Real};
use crate::rng::{splitmix64, Rng};

/// Unnormalized fast Walsh-Hadamard transform, in place. O(N log N).
///
/// Computes H_N * v for the +/-1 Sylvester matrix; callers apply their own
/// normalization. Applying it twice multiplies by N.
pub fn fwht_in_place<R: Real>(v: &mut [R]) -> Result<()> {
    let n = v.len();
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::invalid(format!(
            "fwht requires a power-of-two length, got {n}"
        )));
    }
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = v[j];
                let b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
            i += h * 2;
        }
        h *= 2;
    }
    Ok(())
}

/// Out-of-place convenience wrapper around [`fwht_in_place`].
pub fn fwht<R: Real>(v: &[R]) -> Result<Vec<R>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

pub fn next_power_of_two(n: usize) -> usize {
    n.next_power_of_two()
}

/// The sensing matrix A, stored implicitly.
#[derive(Debug, Clone)]
pub struct HadamardOperator<R: Real> {
    order: usize,
    n_x: usize,
    n_y: usize,
    permutation: Vec<usize>,
    selected_rows: Vec<usize>,
    scale: R,
    permutation_seed: u64,
    row_seed: u64,
}

impl<R: Real> HadamardOperator<R> {
    /// Build an operator for an `n_x` x `n_y` image at compression ratio
    /// `csr` = M / (n_x * n_y). Non-power-of-two pixel counts are zero-padded
    /// up to the next power of two.
    ///
    /// Row 0 (the all-ones pattern) is always selected; the remaining rows
    /// are drawn without replacement by a seeded generator. Two sub-seeds
    /// (column permutation, row selection) are derived from `seed` via
    /// SplitMix64 so they can be stored independently in measurement files.
    pub fn build(n_x: usize, n_y: usize, csr: f64, seed: u64) -> Result<Self> {
        if !(csr > 0.0 && csr <= 1.0) {
            return Err(Error::invalid(format!("csr must be in (0, 1], got {csr}")));
        }
        if n_x == 0 || n_y == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let pixels = n_x * n_y;
        let order = next_power_of_two(pixels);
        let m = ((csr * pixels as f64).round() as usize).clamp(1, order);
        let mut sm = seed;
        let permutation_seed = splitmix64(&mut sm);
        let row_seed = splitmix64(&mut sm);
        Self::from_parts(n_x, n_y, m, permutation_seed, row_seed)
    }

    /// Rebuild an operator from the fields stored in a measurement file.
    pub fn from_parts(
        n_x: usize,
        n_y: usize,
        m: usize,
        permutation_seed: u64,
        row_seed: u64,
    ) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let order = next_power_of_two(n_x * n_y);
        if m == 0 || m > order {
            return Err(Error::invalid(format!(
                "measurement count {m} out of range [1, {order}]"
            )));
        }
        let permutation = Rng::new(permutation_seed).permutation(order);
        let mut selected_rows = Vec::with_capacity(m);
        selected_rows.push(0);
        if m > 1 {
            let mut rng = Rng::new(row_seed);
            selected_rows.extend(rng.sample_distinct(1, order, m - 1));
        }
        Ok(HadamardOperator {
            order,
            n_x,
            n_y,
            permutation,
            selected_rows,
            scale: R::one() / rf::<R>(order as f64).sqrt(),
            permutation_seed,
            row_seed,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    pub fn pixel_count(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn measurement_count(&self) -> usize {
        self.selected_rows.len()
    }

    pub fn csr(&self) -> f64 {
        self.measurement_count() as f64 / self.pixel_count() as f64
    }

    pub fn scale(&self) -> R {
        self.scale
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn selected_rows(&self) -> &[usize] {
        &self.selected_rows
    }

    pub fn permutation_seed(&self) -> u64 {
        self.permutation_seed
    }

    pub fn row_seed(&self) -> u64 {
        self.row_seed
    }

    /// y = A x. `x` must have length `order` (already padded).
    pub fn forward(&self, x: &[R]) -> Result<Vec<R>> {
        let mut buf = self.apply_unnormalized(x)?;
        for v in &mut buf {
            *v *= self.scale;
        }
        Ok(buf)
    }

    /// Row-m dot products of the unnormalized permuted +/-1 matrix with `x`.
    /// This is the physically meaningful quantity A^0 x used by calibration.
    pub fn apply_unnormalized(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.order {
            return Err(Error::SizeMismatch(format!(
                "forward expects length {}, got {}",
                self.order,
                x.len()
            )));
        }
        let mut buf = vec![R::zero(); self.order];
        for (i, &p) in self.permutation.iter().enumerate() {
            buf[i] = x[p];
        }
        fwht_in_place(&mut buf)?;
        Ok(self.selected_rows.iter().map(|&r| buf[r]).collect())
    }

    /// x = A^T y. Since A A^T = I this is also A^T (A A^T)^{-1} y, the
    /// minimum-norm solution of A x = y.
    pub fn adjoint(&self, y: &[R]) -> Result<Vec<R>> {
        let m = self.selected_rows.len();
        if y.len() != m {
            return Err(Error::SizeMismatch(format!(
                "adjoint expects length {m}, got {}",
                y.len()
            )));
        }
        let mut buf = vec![R::zero(); self.order];
        for (i, &r) in self.selected_rows.iter().enumerate() {
            buf[r] = y[i];
        }
        fwht_in_place(&mut buf)?;
        let mut out = vec![R::zero(); self.order];
        for (i, &p) in self.permutation.iter().enumerate() {
            out[p] = buf[i] * self.scale;
        }
        Ok(out)
    }
}

/// Where a measurement vector sits relative to calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationTag {
    /// Orthonormal +/-1 basis measurements, y = A x (+ noise).
    Ideal,
    /// Raw {0,1}-pattern sensor readings with transmittances g (open) and
    /// f (leakage); must be calibrated before reconstruction.
    Physical { g: f64, f: f64 },
}

/// Metadata carried alongside measurement values; enough to rebuild the
/// operator exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMeta {
    pub n_x: u32,
    pub n_y: u32,
    pub m: u32,
    pub permutation_seed: u64,
    pub row_seed: u64,
    pub calibration: CalibrationTag,
}

impl MeasurementMeta {
    pub fn for_operator<R: Real>(op: &HadamardOperator<R>, calibration: CalibrationTag) -> Self {
        MeasurementMeta {
            n_x: op.n_x as u32,
            n_y: op.n_y as u32,
            m: op.measurement_count() as u32,
            permutation_seed: op.permutation_seed,
            row_seed: op.row_seed,
            calibration,
        }
    }

    pub fn csr(&self) -> f64 {
        self.m as f64 / (self.n_x as f64 * self.n_y as f64)
    }

    pub fn rebuild_operator<R: Real>(&self) -> Result<HadamardOperator<R>> {
        HadamardOperator::from_parts(
            self.n_x as usize,
            self.n_y as usize,
            self.m as usize,
            self.permutation_seed,
            self.row_seed,
        )
    }
}

/// One channel of measurements (the y of the sensing model).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector<R: Real> {
    pub values: Vec<R>,
    pub meta: MeasurementMeta,
}
